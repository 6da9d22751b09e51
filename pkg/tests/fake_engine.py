#!/usr/bin/env python3
"""Scripted external engine speaking the node's wire protocol on stdio.

Modes (argv[1], default "normal"):
    normal  -- mock semantics over the wire
    slow    -- handshakes, then never answers requests
    error   -- answers every request with ok=false
    partial -- supports asr/t2tt only, and only eng/fra
"""

import base64
import json
import struct
import sys
import time

from voicenode import media
from voicenode.engine import MockEngine


def send(doc):
    data = json.dumps(doc).encode("utf-8")
    sys.stdout.buffer.write(struct.pack(">I", len(data)) + data)
    sys.stdout.buffer.flush()


def recv():
    header = sys.stdin.buffer.read(4)
    if len(header) < 4:
        return None
    (length,) = struct.unpack(">I", header)
    data = sys.stdin.buffer.read(length)
    if len(data) < length:
        return None
    return json.loads(data.decode("utf-8"))


def main():
    mode = sys.argv[1] if len(sys.argv) > 1 else "normal"
    mock = MockEngine()
    capabilities = ["asr", "t2tt", "s2st"]
    langs = sorted(mock.descriptor.languages)
    if mode == "partial":
        capabilities = ["asr", "t2tt"]
        langs = ["eng", "fra"]
    send({"engine_id": f"fake-{mode}", "capabilities": capabilities, "languages": langs})

    while True:
        req = recv()
        if req is None:
            return
        if mode == "slow":
            time.sleep(3600)
        if mode == "error":
            send({"id": req.get("id"), "ok": False, "error": "scripted failure"})
            continue
        try:
            op = req["op"]
            if op == "asr":
                audio = media.parse_wav(base64.b64decode(req["audio_b64"]))
                result = mock.asr(audio, req["src"])
                send({"id": req["id"], "ok": True, "text": result.text,
                      "confidence": result.confidence})
            elif op == "t2tt":
                text = mock.t2tt(req["text"], req["src"], req["dst"])
                send({"id": req["id"], "ok": True, "text": text})
            elif op == "s2st":
                audio = media.parse_wav(base64.b64decode(req["audio_b64"]))
                out = mock.s2st(audio, req["src"], req["dst"])
                send({"id": req["id"], "ok": True,
                      "audio_b64": base64.b64encode(media.write_wav(out)).decode()})
            else:
                send({"id": req["id"], "ok": False, "error": f"unknown op {op}"})
        except Exception as e:
            send({"id": req.get("id"), "ok": False, "error": str(e)})


if __name__ == "__main__":
    main()
