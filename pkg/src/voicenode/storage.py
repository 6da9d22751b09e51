"""Durable node storage: record database, blob store, chain file, node keys.

Layout under the data directory:

    records.db   -- sqlite database (users, follows, sessions, posts, translations)
    blobs/       -- content-addressed files, <sha256 hex>.wav / .bin
    chain.vdl    -- the ledger file (format owned by the ledger module)
    node_keys/   -- service account keys (translator.key: hex Ed25519 seed)

Blob writes are write-temp-then-rename atomic; record mutations run as
sqlite transactions behind a store-wide lock, so each logical operation
is atomic under concurrent request handlers.
"""

from __future__ import annotations

import hashlib
import os
import sqlite3
import threading
import time
from pathlib import Path

from . import keys
from .errors import CorruptBlob, NotFound, SchemaMismatch, StorageFailure, Unwritable

SCHEMA_VERSION = 1

_SCHEMA = """
CREATE TABLE IF NOT EXISTS meta (
    key TEXT PRIMARY KEY,
    value TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS users (
    user_id BLOB PRIMARY KEY,
    username TEXT NOT NULL UNIQUE COLLATE NOCASE,
    password_record TEXT NOT NULL,
    default_lang TEXT NOT NULL,
    picture_ref TEXT,
    public_key BLOB NOT NULL,
    private_seed BLOB NOT NULL,
    address BLOB NOT NULL,
    created_at INTEGER NOT NULL,
    reg_tx_hash BLOB
);
CREATE TABLE IF NOT EXISTS follows (
    follower BLOB NOT NULL,
    followee BLOB NOT NULL,
    since INTEGER NOT NULL,
    PRIMARY KEY (follower, followee)
);
CREATE TABLE IF NOT EXISTS sessions (
    token TEXT PRIMARY KEY,
    user_id BLOB NOT NULL,
    expires_at INTEGER NOT NULL
);
CREATE TABLE IF NOT EXISTS posts (
    post_id BLOB PRIMARY KEY,
    author BLOB NOT NULL,
    lang TEXT NOT NULL,
    audio_ref TEXT NOT NULL,
    audio_hash BLOB NOT NULL,
    transcript TEXT NOT NULL,
    created_at INTEGER NOT NULL,
    tx_hash BLOB NOT NULL,
    block_height INTEGER NOT NULL,
    block_hash BLOB NOT NULL,
    gas_used INTEGER NOT NULL,
    cost_wei TEXT NOT NULL
);
CREATE INDEX IF NOT EXISTS posts_by_author ON posts (author, created_at);
CREATE TABLE IF NOT EXISTS translations (
    post_id BLOB NOT NULL,
    target_lang TEXT NOT NULL,
    text TEXT NOT NULL,
    audio_ref TEXT NOT NULL,
    engine_id TEXT NOT NULL,
    tx_hash BLOB NOT NULL,
    block_height INTEGER NOT NULL,
    block_hash BLOB NOT NULL,
    gas_used INTEGER NOT NULL,
    cost_wei TEXT NOT NULL,
    PRIMARY KEY (post_id, target_lang)
);
"""


class BlobStore:
    """Content-addressed blob files named by the SHA-256 of their bytes."""

    def __init__(self, root: Path, max_bytes: int = 64 * 1024 * 1024):
        self.root = root
        self.max_bytes = max_bytes
        self.root.mkdir(parents=True, exist_ok=True)

    def _path(self, ref: str) -> Path:
        return self.root / ref

    def put(self, data: bytes, suffix: str = ".wav") -> str:
        """Store bytes, returning the blob ref. Idempotent for equal bytes."""
        if len(data) > self.max_bytes:
            raise StorageFailure(f"blob of {len(data)} bytes exceeds store limit")
        ref = hashlib.sha256(data).hexdigest() + suffix
        path = self._path(ref)
        if path.exists():
            return ref
        tmp = path.with_name(path.name + f".tmp{os.getpid()}.{threading.get_ident()}")
        try:
            with open(tmp, "wb") as f:
                f.write(data)
                f.flush()
                os.fsync(f.fileno())
            os.replace(tmp, path)
        except OSError as e:
            tmp.unlink(missing_ok=True)
            raise Unwritable(f"blob write failed: {e}") from e
        return ref

    def get(self, ref: str) -> bytes:
        """Read a blob and re-verify its content hash."""
        path = self._path(ref)
        if not path.is_file():
            raise NotFound(f"no blob {ref}")
        data = path.read_bytes()
        want = ref.split(".", 1)[0]
        if hashlib.sha256(data).hexdigest() != want:
            raise CorruptBlob(f"blob {ref} content does not match its name")
        return data

    def exists(self, ref: str) -> bool:
        return self._path(ref).is_file()

    def delete(self, ref: str) -> None:
        self._path(ref).unlink(missing_ok=True)


class Store:
    """Open handle on a node data directory."""

    def __init__(self, data_dir):
        self.data_dir = Path(data_dir)
        try:
            self.data_dir.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise Unwritable(f"cannot create data dir {data_dir}: {e}") from e
        if not os.access(self.data_dir, os.W_OK):
            raise Unwritable(f"data dir {data_dir} is not writable")

        self.blobs = BlobStore(self.data_dir / "blobs")
        self.chain_path = self.data_dir / "chain.vdl"
        self.db_path = self.data_dir / "records.db"
        self.keys_dir = self.data_dir / "node_keys"
        self.keys_dir.mkdir(exist_ok=True)

        self.lock = threading.RLock()
        self.db = sqlite3.connect(self.db_path, check_same_thread=False)
        self.db.row_factory = sqlite3.Row
        self.db.execute("PRAGMA journal_mode=WAL")
        self.db.execute("PRAGMA synchronous=NORMAL")
        self._init_schema()
        self.translator_keys = self._load_or_create_service_key("translator")
        self.sweep_sessions()

    def _init_schema(self):
        with self.lock, self.db:
            row = self.db.execute(
                "SELECT value FROM meta WHERE key='schema_version'"
            ).fetchone() if self._has_meta() else None
            if row is None:
                self.db.executescript(_SCHEMA)
                self.db.execute(
                    "INSERT OR IGNORE INTO meta (key, value) VALUES ('schema_version', ?)",
                    (str(SCHEMA_VERSION),),
                )
            else:
                found = int(row["value"])
                if found != SCHEMA_VERSION:
                    raise SchemaMismatch(
                        f"store has schema {found}, this node speaks {SCHEMA_VERSION}"
                    )

    def _has_meta(self) -> bool:
        row = self.db.execute(
            "SELECT name FROM sqlite_master WHERE type='table' AND name='meta'"
        ).fetchone()
        return row is not None

    def _load_or_create_service_key(self, name: str) -> keys.KeyPair:
        path = self.keys_dir / f"{name}.key"
        if path.is_file():
            seed = bytes.fromhex(path.read_text().strip())
            return keys.KeyPair.from_seed(seed)
        pair = keys.KeyPair.generate()
        tmp = path.with_suffix(".key.tmp")
        tmp.write_text(pair.seed.hex() + "\n")
        os.replace(tmp, path)
        return pair

    def sweep_sessions(self, now_ms: int | None = None) -> int:
        """Drop expired sessions; returns how many were removed."""
        now_ms = now_ms if now_ms is not None else int(time.time() * 1000)
        with self.lock, self.db:
            cur = self.db.execute("DELETE FROM sessions WHERE expires_at <= ?", (now_ms,))
            return cur.rowcount

    def close(self):
        self.db.close()
