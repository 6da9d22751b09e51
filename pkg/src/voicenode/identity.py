"""Accounts, sessions, and the follow graph.

Keypairs are generated server-side and held by the node: the node is
the trust boundary in a disaster deployment, and the paper's users
never handle keys. Registration is itself logged on the ledger so the
address-to-username binding stays auditable.
"""

from __future__ import annotations

import hashlib
import hmac
import re
import secrets
import sqlite3
import time
from dataclasses import dataclass

from . import keys, languages, ledger
from .errors import (
    InvalidCredentials,
    SelfFollow,
    UnknownUser,
    UsernameTaken,
    ValidationError,
    WeakPassword,
)
from .storage import Store

USERNAME_RE = re.compile(r"^[A-Za-z0-9_]{3,32}$")
MIN_PASSWORD_LEN = 8
SESSION_TOKEN_BYTES = 32
DEFAULT_SESSION_TTL_S = 24 * 3600

# scrypt cost parameters; configurable per service instance.
KDF_N = 2**14
KDF_R = 8
KDF_P = 1


@dataclass(frozen=True)
class UserProfile:
    user_id: bytes
    username: str
    default_lang: languages.LanguageCode
    public_key: bytes
    address: bytes
    created_at: int
    picture_ref: str | None = None

    @property
    def address_wire(self) -> str:
        return keys.address_to_wire(self.address)


@dataclass(frozen=True)
class FollowEdge:
    follower: bytes
    followee: bytes
    since: int


@dataclass(frozen=True)
class Session:
    token: str
    user_id: bytes
    expires_at: int


def hash_password(password: str, *, n: int = KDF_N, r: int = KDF_R, p: int = KDF_P) -> str:
    salt = secrets.token_bytes(16)
    digest = hashlib.scrypt(password.encode("utf-8"), salt=salt, n=n, r=r, p=p, dklen=32)
    return f"scrypt${n}${r}${p}${salt.hex()}${digest.hex()}"


def check_password(password: str, record: str) -> bool:
    try:
        scheme, n, r, p, salt_hex, digest_hex = record.split("$")
        if scheme != "scrypt":
            return False
        digest = hashlib.scrypt(
            password.encode("utf-8"),
            salt=bytes.fromhex(salt_hex),
            n=int(n), r=int(r), p=int(p), dklen=32,
        )
        return hmac.compare_digest(digest, bytes.fromhex(digest_hex))
    except (ValueError, TypeError):
        return False


def _now_ms() -> int:
    return int(time.time() * 1000)


class IdentityService:
    def __init__(
        self,
        store: Store,
        chain: ledger.Chain,
        session_ttl_s: int = DEFAULT_SESSION_TTL_S,
        kdf_n: int = KDF_N,
    ):
        self.store = store
        self.chain = chain
        self.session_ttl_s = session_ttl_s
        self.kdf_n = kdf_n
        self._keypairs: dict[bytes, keys.KeyPair] = {}

    # -- profiles -----------------------------------------------------------

    def register(self, username: str, password: str, default_lang: str) -> UserProfile:
        if not USERNAME_RE.match(username or ""):
            raise ValidationError("username must be 3-32 chars of [a-zA-Z0-9_]")
        if len(password) < MIN_PASSWORD_LEN:
            raise WeakPassword(f"password must be at least {MIN_PASSWORD_LEN} chars")
        lang = languages.resolve(default_lang)

        pair = keys.KeyPair.generate()
        user_id = secrets.token_bytes(16)
        created_at = _now_ms()
        record = hash_password(password, n=self.kdf_n)

        with self.store.lock:
            try:
                with self.store.db:
                    self.store.db.execute(
                        "INSERT INTO users (user_id, username, password_record,"
                        " default_lang, public_key, private_seed, address, created_at)"
                        " VALUES (?, ?, ?, ?, ?, ?, ?, ?)",
                        (user_id, username, record, lang.code, pair.public_key,
                         pair.seed, pair.address, created_at),
                    )
            except sqlite3.IntegrityError:
                raise UsernameTaken(f"username {username!r} is taken") from None
            try:
                receipt = self.chain.submit(
                    ledger.KIND_REGISTRATION,
                    ledger.encode_registration_payload(username, lang.code),
                    pair,
                )
                with self.store.db:
                    self.store.db.execute(
                        "UPDATE users SET reg_tx_hash = ? WHERE user_id = ?",
                        (receipt.tx_hash, user_id),
                    )
            except Exception:
                with self.store.db:
                    self.store.db.execute("DELETE FROM users WHERE user_id = ?", (user_id,))
                raise
        return self._profile_from_row(self._row_by_id(user_id))

    def login(self, username: str, password: str) -> Session:
        row = self.store.db.execute(
            "SELECT * FROM users WHERE username = ?", (username,)
        ).fetchone()
        if row is None:
            # Burn the same KDF work for unknown users so the error is
            # indistinguishable by timing as well as by message.
            check_password(password, hash_password("", n=self.kdf_n))
            raise InvalidCredentials("bad username or password")
        if not check_password(password, row["password_record"]):
            raise InvalidCredentials("bad username or password")
        token = secrets.token_bytes(SESSION_TOKEN_BYTES).hex()
        expires_at = _now_ms() + self.session_ttl_s * 1000
        with self.store.lock, self.store.db:
            self.store.db.execute(
                "INSERT INTO sessions (token, user_id, expires_at) VALUES (?, ?, ?)",
                (token, row["user_id"], expires_at),
            )
        return Session(token=token, user_id=row["user_id"], expires_at=expires_at)

    def authenticate(self, token: str) -> UserProfile:
        row = self.store.db.execute(
            "SELECT * FROM sessions WHERE token = ?", (token or "",)
        ).fetchone()
        if row is None or row["expires_at"] <= _now_ms():
            raise InvalidCredentials("missing, unknown, or expired session token")
        return self.profile_by_id(row["user_id"])

    def profile_by_id(self, user_id: bytes) -> UserProfile:
        return self._profile_from_row(self._row_by_id(user_id))

    def profile_by_username(self, username: str) -> UserProfile:
        row = self.store.db.execute(
            "SELECT * FROM users WHERE username = ?", (username,)
        ).fetchone()
        if row is None:
            raise UnknownUser(f"no user {username!r}")
        return self._profile_from_row(row)

    def update_default_lang(self, user_id: bytes, lang_tag: str) -> UserProfile:
        lang = languages.resolve(lang_tag)
        with self.store.lock, self.store.db:
            self.store.db.execute(
                "UPDATE users SET default_lang = ? WHERE user_id = ?",
                (lang.code, user_id),
            )
        return self.profile_by_id(user_id)

    def set_picture(self, user_id: bytes, picture_ref: str) -> UserProfile:
        with self.store.lock, self.store.db:
            self.store.db.execute(
                "UPDATE users SET picture_ref = ? WHERE user_id = ?",
                (picture_ref, user_id),
            )
        return self.profile_by_id(user_id)

    def keypair_for(self, user_id: bytes) -> keys.KeyPair:
        pair = self._keypairs.get(user_id)
        if pair is None:
            row = self._row_by_id(user_id)
            pair = keys.KeyPair.from_seed(row["private_seed"])
            self._keypairs[user_id] = pair
        return pair

    def registration_tx_hash(self, user_id: bytes) -> bytes | None:
        return self._row_by_id(user_id)["reg_tx_hash"]

    # -- follow graph ----------------------------------------------------------

    def follow(self, follower_id: bytes, followee_username: str) -> FollowEdge:
        followee = self.profile_by_username(followee_username)
        if followee.user_id == follower_id:
            raise SelfFollow("cannot follow yourself")
        since = _now_ms()
        with self.store.lock, self.store.db:
            self.store.db.execute(
                "INSERT OR IGNORE INTO follows (follower, followee, since) VALUES (?, ?, ?)",
                (follower_id, followee.user_id, since),
            )
        row = self.store.db.execute(
            "SELECT * FROM follows WHERE follower = ? AND followee = ?",
            (follower_id, followee.user_id),
        ).fetchone()
        return FollowEdge(row["follower"], row["followee"], row["since"])

    def unfollow(self, follower_id: bytes, followee_username: str) -> None:
        followee = self.profile_by_username(followee_username)
        with self.store.lock, self.store.db:
            self.store.db.execute(
                "DELETE FROM follows WHERE follower = ? AND followee = ?",
                (follower_id, followee.user_id),
            )

    def followees(self, follower_id: bytes) -> list[bytes]:
        rows = self.store.db.execute(
            "SELECT followee FROM follows WHERE follower = ?", (follower_id,)
        ).fetchall()
        return [r["followee"] for r in rows]

    # -- internal ---------------------------------------------------------------

    def _row_by_id(self, user_id: bytes) -> sqlite3.Row:
        row = self.store.db.execute(
            "SELECT * FROM users WHERE user_id = ?", (user_id,)
        ).fetchone()
        if row is None:
            raise UnknownUser("no such user id")
        return row

    def _profile_from_row(self, row: sqlite3.Row) -> UserProfile:
        return UserProfile(
            user_id=row["user_id"],
            username=row["username"],
            default_lang=languages.resolve(row["default_lang"]),
            public_key=row["public_key"],
            address=row["address"],
            created_at=row["created_at"],
            picture_ref=row["picture_ref"],
        )
