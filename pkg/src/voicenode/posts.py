"""Voice-post lifecycle and follower-side multilingual resolution.

A post is ingested once (WAV stored, transcribed, logged on the ledger)
and translated lazily: the first viewer in a given language triggers
exactly one translation record and one translation transaction,
enforced by per-(post, language) single-flight locks backed by a
database uniqueness constraint. Translation work is bounded this way on
purpose: fan-out to every follower language up front would be wasted
effort on constrained hardware.
"""

from __future__ import annotations

import base64
import binascii
import secrets
import sqlite3
import threading
import time
from dataclasses import dataclass

from . import ledger, media
from .errors import BadCursor, NodeError, UnknownPost
from .identity import IdentityService, UserProfile
from .languages import resolve
from .metrics import MetricsRegistry
from .storage import Store

MAX_PAGE_SIZE = 50


@dataclass(frozen=True)
class VoicePost:
    post_id: bytes
    author: bytes
    lang: str
    audio_ref: str
    audio_hash: bytes
    transcript: str
    created_at: int
    tx_hash: bytes
    block_height: int
    block_hash: bytes
    cost_wei: int


@dataclass(frozen=True)
class TranslationRecord:
    post_id: bytes
    target_lang: str
    text: str
    audio_ref: str
    engine_id: str
    tx_hash: bytes
    block_height: int
    block_hash: bytes
    cost_wei: int


@dataclass(frozen=True)
class FeedItem:
    post_id: bytes
    author_username: str
    lang: str
    created_at: int
    viewer_lang: str
    text_for_viewer: str
    audio_source: str  # "original" | "translated"
    post_tx_hash: bytes
    translation_tx_hash: bytes | None = None
    engine_id: str | None = None
    translation_error: str | None = None


def _now_ms() -> int:
    return int(time.time() * 1000)


def encode_cursor(created_at: int, post_id: bytes) -> str:
    raw = f"{created_at}:{post_id.hex()}".encode("ascii")
    return base64.urlsafe_b64encode(raw).decode("ascii")


def decode_cursor(token: str) -> tuple[int, bytes]:
    try:
        raw = base64.urlsafe_b64decode(token.encode("ascii")).decode("ascii")
        created_str, pid_hex = raw.split(":")
        return int(created_str), bytes.fromhex(pid_hex)
    except (ValueError, binascii.Error) as e:
        raise BadCursor(f"malformed cursor: {e}") from None


class PostsService:
    def __init__(
        self,
        store: Store,
        chain,
        engine,
        identities: IdentityService,
        metrics: MetricsRegistry,
        max_wav_bytes: int = media.DEFAULT_MAX_BYTES,
        max_wav_seconds: int = media.DEFAULT_MAX_SECONDS,
    ):
        self.store = store
        self.chain = chain
        self.engine = engine
        self.identities = identities
        self.metrics = metrics
        self.max_wav_bytes = max_wav_bytes
        self.max_wav_seconds = max_wav_seconds
        self._flight_guard = threading.Lock()
        self._flights: dict[tuple[bytes, str], threading.Lock] = {}

    # -- creation -----------------------------------------------------------

    def create_post(self, author: UserProfile, wav_bytes: bytes,
                    lang_tag: str | None = None) -> VoicePost:
        lang = resolve(lang_tag) if lang_tag else author.default_lang
        audio = media.parse_wav(wav_bytes, self.max_wav_bytes, self.max_wav_seconds)
        audio_hash = media.audio_hash(wav_bytes)
        audio_ref = self.store.blobs.put(wav_bytes)
        try:
            with self.metrics.timed("asr"):
                result = self.engine.asr(audio, lang.code)
            post_id = secrets.token_bytes(16)
            payload = ledger.encode_post_payload(
                post_id, lang.code, audio_hash, result.text
            )
            receipt = self.chain.submit(
                ledger.KIND_POST, payload, self.identities.keypair_for(author.user_id)
            )
            created_at = _now_ms()
            with self.store.lock, self.store.db:
                self.store.db.execute(
                    "INSERT INTO posts (post_id, author, lang, audio_ref, audio_hash,"
                    " transcript, created_at, tx_hash, block_height, block_hash,"
                    " gas_used, cost_wei) VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?)",
                    (post_id, author.user_id, lang.code, audio_ref, audio_hash,
                     result.text, created_at, receipt.tx_hash, receipt.block_height,
                     receipt.block_hash, receipt.gas_used, str(receipt.cost_wei)),
                )
        except Exception:
            self._gc_blob(audio_ref)
            raise
        return self.get_post(post_id)

    def _gc_blob(self, audio_ref: str):
        """Drop a blob no stored row references (failure-path cleanup)."""
        with self.store.lock:
            used = self.store.db.execute(
                "SELECT 1 FROM posts WHERE audio_ref = ?"
                " UNION SELECT 1 FROM translations WHERE audio_ref = ? LIMIT 1",
                (audio_ref, audio_ref),
            ).fetchone()
            if used is None:
                self.store.blobs.delete(audio_ref)

    # -- lookup -------------------------------------------------------------

    def get_post(self, post_id: bytes) -> VoicePost:
        row = self.store.db.execute(
            "SELECT * FROM posts WHERE post_id = ?", (post_id,)
        ).fetchone()
        if row is None:
            raise UnknownPost(f"no post {post_id.hex()}")
        return _post_from_row(row)

    def original_audio(self, post: VoicePost) -> bytes:
        data = self.store.blobs.get(post.audio_ref)
        if media.audio_hash(data) != post.audio_hash:
            raise NodeError("stored audio does not match its recorded hash")
        return data

    def get_translation(self, post_id: bytes, target_lang: str) -> TranslationRecord | None:
        row = self.store.db.execute(
            "SELECT * FROM translations WHERE post_id = ? AND target_lang = ?",
            (post_id, target_lang),
        ).fetchone()
        return _translation_from_row(row) if row else None

    # -- resolution -----------------------------------------------------------

    def resolve_for_viewer(self, post_id: bytes, viewer: UserProfile,
                           lang_override: str | None = None) -> FeedItem:
        post = self.get_post(post_id)
        author = self.identities.profile_by_id(post.author)
        viewer_lang = resolve(lang_override) if lang_override else viewer.default_lang

        if viewer_lang.code == post.lang:
            return FeedItem(
                post_id=post.post_id,
                author_username=author.username,
                lang=post.lang,
                created_at=post.created_at,
                viewer_lang=viewer_lang.code,
                text_for_viewer=post.transcript,
                audio_source="original",
                post_tx_hash=post.tx_hash,
            )

        try:
            record = self._translation_single_flight(post, viewer_lang.code)
        except NodeError as e:
            # Surface the post in its original language rather than hiding it.
            return FeedItem(
                post_id=post.post_id,
                author_username=author.username,
                lang=post.lang,
                created_at=post.created_at,
                viewer_lang=viewer_lang.code,
                text_for_viewer=post.transcript,
                audio_source="original",
                post_tx_hash=post.tx_hash,
                translation_error=f"{e.code}: {e.message}",
            )
        return FeedItem(
            post_id=post.post_id,
            author_username=author.username,
            lang=post.lang,
            created_at=post.created_at,
            viewer_lang=viewer_lang.code,
            text_for_viewer=record.text,
            audio_source="translated",
            post_tx_hash=post.tx_hash,
            translation_tx_hash=record.tx_hash,
            engine_id=record.engine_id,
        )

    def _translation_single_flight(self, post: VoicePost, target: str) -> TranslationRecord:
        existing = self.get_translation(post.post_id, target)
        if existing is not None:
            return existing
        key = (post.post_id, target)
        with self._flight_guard:
            lock = self._flights.setdefault(key, threading.Lock())
        with lock:
            existing = self.get_translation(post.post_id, target)
            if existing is not None:
                return existing
            return self._translate(post, target)

    def _translate(self, post: VoicePost, target: str) -> TranslationRecord:
        original = self.original_audio(post)
        with self.metrics.timed("translate_text"):
            text = self.engine.t2tt(post.transcript, post.lang, target)
        with self.metrics.timed("synth_speech"):
            speech = self.engine.s2st(media.parse_wav(original), post.lang, target)
        audio_ref = self.store.blobs.put(media.write_wav(speech))
        engine_id = self.engine.descriptor.engine_id
        try:
            payload = ledger.encode_translation_payload(
                post.post_id, target, engine_id, text
            )
            receipt = self.chain.submit(
                ledger.KIND_TRANSLATION, payload, self.store.translator_keys
            )
            with self.store.lock, self.store.db:
                try:
                    self.store.db.execute(
                        "INSERT INTO translations (post_id, target_lang, text, audio_ref,"
                        " engine_id, tx_hash, block_height, block_hash, gas_used, cost_wei)"
                        " VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?)",
                        (post.post_id, target, text, audio_ref, engine_id,
                         receipt.tx_hash, receipt.block_height, receipt.block_hash,
                         receipt.gas_used, str(receipt.cost_wei)),
                    )
                except sqlite3.IntegrityError:
                    pass  # lost a race; the stored record wins
        except Exception:
            self._gc_blob(audio_ref)
            raise
        return self.get_translation(post.post_id, target)

    def translated_audio(self, post_id: bytes, viewer: UserProfile,
                         lang_override: str | None = None) -> tuple[bytes, FeedItem]:
        """Audio for the viewer's language: original bytes when languages
        match, otherwise the (lazily created) synthesized translation."""
        item = self.resolve_for_viewer(post_id, viewer, lang_override)
        post = self.get_post(post_id)
        if item.audio_source == "original":
            return self.original_audio(post), item
        record = self.get_translation(post_id, item.viewer_lang)
        return self.store.blobs.get(record.audio_ref), item

    # -- timeline ---------------------------------------------------------------

    def timeline(self, viewer: UserProfile, cursor: str | None = None,
                 limit: int = 20, lang_override: str | None = None
                 ) -> tuple[list[FeedItem], str | None]:
        limit = max(1, min(int(limit), MAX_PAGE_SIZE))
        followees = self.identities.followees(viewer.user_id)
        if not followees:
            return [], None
        marks = ",".join("?" for _ in followees)
        params: list = list(followees)
        where = f"author IN ({marks})"
        if cursor:
            created_at, post_id = decode_cursor(cursor)
            where += " AND (created_at < ? OR (created_at = ? AND post_id > ?))"
            params += [created_at, created_at, post_id]
        rows = self.store.db.execute(
            f"SELECT * FROM posts WHERE {where}"
            " ORDER BY created_at DESC, post_id ASC LIMIT ?",
            params + [limit + 1],
        ).fetchall()
        page = rows[:limit]
        items = [
            self.resolve_for_viewer(row["post_id"], viewer, lang_override)
            for row in page
        ]
        next_cursor = None
        if len(rows) > limit and page:
            last = page[-1]
            next_cursor = encode_cursor(last["created_at"], last["post_id"])
        return items, next_cursor

    # -- transaction details -------------------------------------------------------

    def transaction_details(self, post_id: bytes,
                            viewer_lang: str | None = None) -> dict:
        post = self.get_post(post_id)
        details = {"post": self._tx_details(post.tx_hash)}
        if viewer_lang:
            target = resolve(viewer_lang).code
            if target != post.lang:
                record = self.get_translation(post_id, target)
                if record is not None:
                    details["translation"] = self._tx_details(record.tx_hash)
        return details

    def _tx_details(self, tx_hash: bytes) -> dict:
        tx, height, block_hash, cost_wei = self.chain.get_transaction(tx_hash)
        decoded = ledger.decode_payload(tx.kind, tx.payload)
        return {
            "tx_hash": "0x" + tx_hash.hex(),
            "block_height": height,
            "block_hash": "0x" + block_hash.hex(),
            "sender_address": "0x" + tx.sender.hex(),
            "kind": ledger.KIND_NAMES.get(tx.kind, str(tx.kind)),
            "text": decoded.get("text", ""),
            "timestamp_ms": tx.timestamp_ms,
            "cost_wei": str(cost_wei),
        }


def _post_from_row(row) -> VoicePost:
    return VoicePost(
        post_id=row["post_id"],
        author=row["author"],
        lang=row["lang"],
        audio_ref=row["audio_ref"],
        audio_hash=row["audio_hash"],
        transcript=row["transcript"],
        created_at=row["created_at"],
        tx_hash=row["tx_hash"],
        block_height=row["block_height"],
        block_hash=row["block_hash"],
        cost_wei=int(row["cost_wei"]),
    )


def _translation_from_row(row) -> TranslationRecord:
    return TranslationRecord(
        post_id=row["post_id"],
        target_lang=row["target_lang"],
        text=row["text"],
        audio_ref=row["audio_ref"],
        engine_id=row["engine_id"],
        tx_hash=row["tx_hash"],
        block_height=row["block_height"],
        block_hash=row["block_hash"],
        cost_wei=int(row["cost_wei"]),
    )
