"""Node assembly: one object owning storage, ledger, engine, and services."""

from __future__ import annotations

from . import config as config_mod
from . import ledger, netguard
from .engine import ExternalEngine, MockEngine
from .identity import IdentityService
from .metrics import MetricsRegistry
from .posts import PostsService
from .storage import Store


class MeteredChain:
    """Chain wrapper recording commit latency and per-kind cost."""

    def __init__(self, chain: ledger.Chain, metrics: MetricsRegistry):
        self._chain = chain
        self._metrics = metrics

    def submit(self, kind: int, payload: bytes, signer) -> ledger.Receipt:
        with self._metrics.timed("ledger_commit"):
            receipt = self._chain.submit(kind, payload, signer)
        self._metrics.record_cost(ledger.KIND_NAMES[kind], receipt.cost_wei)
        return receipt

    def __getattr__(self, name):
        return getattr(self._chain, name)


class VoiceNode:
    """A fully wired node; serves requests once handed to the HTTP layer."""

    def __init__(self, cfg: config_mod.NodeConfig, repair_chain: bool = True):
        cfg.validate()
        self.config = cfg
        if cfg.mode == config_mod.MODE_EMERGENCY:
            netguard.enable()
        self.metrics = MetricsRegistry()
        self.store = Store(cfg.data_dir)
        batch = (
            cfg.block_interval_ms
            if cfg.block_policy == config_mod.POLICY_BATCH
            else None
        )
        self.raw_chain = ledger.Chain(
            self.store.chain_path,
            gas_schedule=ledger.GasSchedule(gas_price_wei=cfg.gas_price_wei),
            batch_interval_ms=batch,
            repair=repair_chain,
        )
        self.chain = MeteredChain(self.raw_chain, self.metrics)
        if cfg.engine == config_mod.ENGINE_EXTERNAL:
            self.engine = ExternalEngine(cfg.engine_path, timeout_s=cfg.engine_timeout_s)
        else:
            self.engine = MockEngine()
        self.identities = IdentityService(
            self.store, self.chain, session_ttl_s=cfg.session_ttl_s, kdf_n=cfg.kdf_n
        )
        self.posts = PostsService(
            self.store, self.chain, self.engine, self.identities, self.metrics,
            max_wav_bytes=cfg.max_wav_bytes, max_wav_seconds=cfg.max_wav_seconds,
        )

    def close(self):
        self.engine.close()
        self.raw_chain.close()
        self.store.close()
