"""Ed25519 signing keys and ledger address derivation.

One deterministic scheme node-wide: 32-byte verification keys, 64-byte
signatures. A ledger address is the last 20 bytes of the SHA-256 of the
verification key; on the wire it is "0x" plus 40 lowercase hex chars.
"""

from __future__ import annotations

import hashlib

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)

from .errors import BadKeyLength, ValidationError

PUBLIC_KEY_LEN = 32
SIGNATURE_LEN = 64
ADDRESS_LEN = 20


class KeyPair:
    """An Ed25519 keypair held by the node on a user's behalf."""

    def __init__(self, private: Ed25519PrivateKey):
        self._private = private
        self.public_key: bytes = private.public_key().public_bytes_raw()
        self.address: bytes = derive_address(self.public_key)

    @classmethod
    def generate(cls) -> "KeyPair":
        return cls(Ed25519PrivateKey.generate())

    @classmethod
    def from_seed(cls, seed: bytes) -> "KeyPair":
        if len(seed) != 32:
            raise BadKeyLength("seed must be 32 bytes")
        return cls(Ed25519PrivateKey.from_private_bytes(seed))

    @property
    def seed(self) -> bytes:
        return self._private.private_bytes_raw()

    def sign(self, message: bytes) -> bytes:
        return self._private.sign(message)


def verify_signature(public_key: bytes, signature: bytes, message: bytes) -> bool:
    if len(public_key) != PUBLIC_KEY_LEN or len(signature) != SIGNATURE_LEN:
        return False
    try:
        Ed25519PublicKey.from_public_bytes(public_key).verify(signature, message)
        return True
    except (InvalidSignature, ValueError):
        return False


def derive_address(public_key: bytes) -> bytes:
    """Last 20 bytes of SHA-256(public_key)."""
    if len(public_key) != PUBLIC_KEY_LEN:
        raise BadKeyLength(f"key is {len(public_key)} bytes, want {PUBLIC_KEY_LEN}")
    return hashlib.sha256(public_key).digest()[-ADDRESS_LEN:]


def address_to_wire(address: bytes) -> str:
    return "0x" + address.hex()


def address_from_wire(text: str) -> bytes:
    if not text.startswith("0x") or len(text) != 2 + ADDRESS_LEN * 2:
        raise ValidationError(f"bad address: {text!r}")
    try:
        return bytes.fromhex(text[2:])
    except ValueError:
        raise ValidationError(f"bad address: {text!r}") from None
