"""JSON projections of ledger records shared by the HTTP API and the CLI.

Rendering lives in one place so `vnode ledger show` output is
byte-identical to the corresponding API response body.
"""

from __future__ import annotations

import json

from . import ledger


def tx_dict(tx: ledger.Transaction) -> dict:
    return {
        "version": tx.version,
        "kind": ledger.KIND_NAMES.get(tx.kind, str(tx.kind)),
        "sender": "0x" + tx.sender.hex(),
        "nonce": tx.nonce,
        "timestamp_ms": tx.timestamp_ms,
        "payload_hex": tx.payload.hex(),
        "payload": _decoded_payload(tx),
        "public_key": tx.public_key.hex(),
        "signature": tx.signature.hex(),
        "tx_hash": "0x" + tx.tx_hash().hex(),
    }


def _decoded_payload(tx: ledger.Transaction) -> dict:
    decoded = ledger.decode_payload(tx.kind, tx.payload)
    return {
        k: ("0x" + v.hex() if isinstance(v, bytes) else v) for k, v in decoded.items()
    }


def block_dict(block: ledger.Block, block_hash: bytes) -> dict:
    return {
        "version": block.version,
        "height": block.height,
        "prev_hash": "0x" + block.prev_hash.hex(),
        "timestamp_ms": block.timestamp_ms,
        "tx_count": block.tx_count,
        "tx_root": "0x" + block.tx_root.hex(),
        "block_hash": "0x" + block_hash.hex(),
        "transactions": [tx_dict(t) for t in block.transactions],
    }


def report_dict(report: ledger.VerificationReport) -> dict:
    out: dict = {"ok": report.ok, "blocks_checked": report.blocks_checked}
    if report.first_error is not None:
        out["first_error"] = {
            "height": report.first_error.height,
            "reason": report.first_error.reason,
        }
    else:
        out["first_error"] = None
    return out


def canonical_json(obj) -> str:
    """The one JSON rendering used on every wire surface."""
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"
