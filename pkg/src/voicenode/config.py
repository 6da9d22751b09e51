"""Node configuration.

Config files are flat UTF-8 ``key=value`` documents ('#' starts a
comment). Every key can be overridden by an environment variable named
VNODE_<UPPERCASED_KEY>, e.g. VNODE_BIND_ADDR or VNODE_GAS_PRICE_WEI.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ValidationError

ENV_PREFIX = "VNODE_"

MODE_NORMAL = "normal"
MODE_EMERGENCY = "emergency"

ENGINE_MOCK = "mock"
ENGINE_EXTERNAL = "external"

POLICY_IMMEDIATE = "immediate"
POLICY_BATCH = "batch"


@dataclass
class NodeConfig:
    bind_addr: str = "0.0.0.0:8080"
    data_dir: str = "./data"
    mode: str = MODE_NORMAL
    engine: str = ENGINE_MOCK
    engine_path: str = ""
    engine_timeout_s: float = 60.0
    gas_price_wei: int = 115_000_000
    session_ttl_s: int = 24 * 3600
    max_wav_bytes: int = 10 * 1024 * 1024
    max_wav_seconds: int = 120
    block_policy: str = POLICY_IMMEDIATE
    block_interval_ms: int = 500
    static_dir: str = ""
    kdf_n: int = 2**14

    def validate(self) -> "NodeConfig":
        if self.mode not in (MODE_NORMAL, MODE_EMERGENCY):
            raise ValidationError(f"mode must be normal or emergency, not {self.mode!r}")
        if self.engine not in (ENGINE_MOCK, ENGINE_EXTERNAL):
            raise ValidationError(f"engine must be mock or external, not {self.engine!r}")
        if self.engine == ENGINE_EXTERNAL:
            if not self.engine_path:
                raise ValidationError("engine=external requires engine_path")
            if not Path(self.engine_path).exists():
                raise ValidationError(f"engine_path {self.engine_path!r} does not exist")
            if self.mode == MODE_EMERGENCY and "://" in self.engine_path:
                raise ValidationError(
                    "emergency mode refuses remote engine endpoints; use a local path"
                )
        if self.block_policy not in (POLICY_IMMEDIATE, POLICY_BATCH):
            raise ValidationError(f"block_policy must be immediate or batch")
        for name in ("gas_price_wei", "session_ttl_s", "max_wav_bytes",
                     "max_wav_seconds", "block_interval_ms", "kdf_n"):
            if getattr(self, name) <= 0:
                raise ValidationError(f"{name} must be > 0")
        host, _, port = self.bind_addr.rpartition(":")
        if not host or not port.isdigit() or not 0 <= int(port) < 65536:
            raise ValidationError(f"bad bind_addr {self.bind_addr!r}")
        return self

    @property
    def bind_host(self) -> str:
        return self.bind_addr.rpartition(":")[0]

    @property
    def bind_port(self) -> int:
        return int(self.bind_addr.rpartition(":")[2])


_INT_KEYS = {"gas_price_wei", "session_ttl_s", "max_wav_bytes", "max_wav_seconds",
             "block_interval_ms", "kdf_n"}
_FLOAT_KEYS = {"engine_timeout_s"}


def parse_config_text(text: str) -> dict[str, str]:
    values: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValidationError(f"config line {lineno} is not key=value: {line!r}")
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    return values


def load_config(path: str | None = None, env: dict | None = None,
                overrides: dict | None = None) -> NodeConfig:
    """Build a NodeConfig from file < environment < explicit overrides."""
    env = os.environ if env is None else env
    values: dict[str, str] = {}
    if path:
        values.update(parse_config_text(Path(path).read_text(encoding="utf-8")))
    known = set(NodeConfig.__dataclass_fields__)
    for key in known:
        env_key = ENV_PREFIX + key.upper()
        if env_key in env:
            values[key] = env[env_key]
    if overrides:
        values.update({k: str(v) for k, v in overrides.items() if v is not None})

    config = NodeConfig()
    for key, value in values.items():
        if key not in known:
            raise ValidationError(f"unknown config key {key!r}")
        if key in _INT_KEYS:
            try:
                setattr(config, key, int(value))
            except ValueError:
                raise ValidationError(f"{key} must be an integer, got {value!r}") from None
        elif key in _FLOAT_KEYS:
            try:
                setattr(config, key, float(value))
            except ValueError:
                raise ValidationError(f"{key} must be a number, got {value!r}") from None
        else:
            setattr(config, key, value)
    return config.validate()
