"""Stage-level latency instrumentation.

A bounded in-memory ring per stage feeds the report; percentiles use
the nearest-rank method so reports are reproducible from the raw
samples. Safe for concurrent recording from all request handlers.
"""

from __future__ import annotations

import math
import threading
import time
from collections import deque
from dataclasses import dataclass

STAGES = (
    "asr",
    "translate_text",
    "synth_speech",
    "ledger_commit",
    "end_to_end",
    "login_to_timeline",
)

DEFAULT_RING_SIZE = 10_000


@dataclass(frozen=True)
class StageTiming:
    stage: str
    duration_ms: float
    at: int  # unix ms

    def __post_init__(self):
        if self.stage not in STAGES:
            raise ValueError(f"unknown stage {self.stage!r}")
        if self.duration_ms < 0:
            raise ValueError("duration_ms must be >= 0")


def nearest_rank(sorted_values: list[float], percentile: float) -> float:
    """Nearest-rank percentile over an already-sorted sample list."""
    if not sorted_values:
        raise ValueError("no samples")
    rank = max(1, math.ceil(percentile / 100.0 * len(sorted_values)))
    return sorted_values[rank - 1]


class MetricsRegistry:
    def __init__(self, ring_size: int = DEFAULT_RING_SIZE):
        self._lock = threading.Lock()
        self._rings: dict[str, deque[StageTiming]] = {
            stage: deque(maxlen=ring_size) for stage in STAGES
        }
        self._costs: dict[str, list[int]] = {}
        self._started_at = int(time.time() * 1000)

    def record_stage(self, timing: StageTiming) -> None:
        with self._lock:
            self._rings[timing.stage].append(timing)

    def record(self, stage: str, duration_ms: float) -> None:
        self.record_stage(StageTiming(stage, duration_ms, int(time.time() * 1000)))

    def record_cost(self, kind_name: str, cost_wei: int) -> None:
        with self._lock:
            self._costs.setdefault(kind_name, []).append(cost_wei)

    def timed(self, stage: str):
        """Context manager recording the wall time of its body."""
        return _Timed(self, stage)

    def raw_samples(self) -> list[StageTiming]:
        with self._lock:
            out = []
            for stage in STAGES:
                out.extend(self._rings[stage])
        return sorted(out, key=lambda t: t.at)

    def report(self) -> dict:
        """Aggregate snapshot: per-stage count/p50/p95/mean plus mean
        transaction cost per kind. Stages with no samples are omitted."""
        with self._lock:
            rings = {s: list(r) for s, r in self._rings.items()}
            costs = {k: list(v) for k, v in self._costs.items()}
        stages = {}
        for stage, samples in rings.items():
            if not samples:
                continue
            values = sorted(t.duration_ms for t in samples)
            stages[stage] = {
                "count": len(values),
                "p50_ms": nearest_rank(values, 50),
                "p95_ms": nearest_rank(values, 95),
                "mean_ms": sum(values) / len(values),
            }
        cost = {
            kind: {"count": len(v), "mean_cost_wei": sum(v) // len(v)}
            for kind, v in costs.items()
            if v
        }
        return {
            "stages": stages,
            "cost": cost,
            "window": {"since_ms": self._started_at, "until_ms": int(time.time() * 1000)},
        }


class _Timed:
    def __init__(self, registry: MetricsRegistry, stage: str):
        self.registry = registry
        self.stage = stage
        self.duration_ms: float | None = None

    def __enter__(self):
        self._t0 = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        self.duration_ms = (time.perf_counter() - self._t0) * 1000.0
        if exc_type is None:
            self.registry.record(self.stage, self.duration_ms)
        return False
