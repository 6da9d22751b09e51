"""Speech engines: ASR, text translation, and speech-to-speech synthesis.

Two implementations share one interface: a deterministic in-process
mock for desk-scale testing, and an adapter that drives a real ML
engine in a subprocess over a length-prefixed JSON protocol on its
standard streams.

The mock transports ground truth in the WAV "txts" chunk: ASR returns
the chunk text verbatim, text translation prefixes "[<dst>] " when the
languages differ, and speech synthesis emits the deterministic tone
recipe from the media module carrying the translated text. Real
engines ignore the chunk.
"""

from __future__ import annotations

import base64
import json
import struct
import subprocess
import threading
from dataclasses import dataclass, field

from . import media
from .errors import EngineUnavailable, NoTranscriptChunk, UnsupportedLanguage
from .languages import resolve, supported_languages
from .media import WavAudio

DEFAULT_TIMEOUT_S = 60.0

CAP_ASR = "asr"
CAP_T2TT = "t2tt"
CAP_S2ST = "s2st"


@dataclass(frozen=True)
class EngineDescriptor:
    engine_id: str
    capabilities: frozenset[str]
    languages: frozenset[str]  # 3-letter codes


@dataclass(frozen=True)
class TranscriptionResult:
    text: str
    lang: str
    confidence: float
    audio_duration_ms: int


class MockEngine:
    """Pure, stateless stand-in for ML inference. Safe for concurrent use."""

    def __init__(self):
        self.descriptor = EngineDescriptor(
            engine_id="mock-1",
            capabilities=frozenset({CAP_ASR, CAP_T2TT, CAP_S2ST}),
            languages=frozenset(l.code for l in supported_languages()),
        )

    def _check_lang(self, *tags: str):
        for tag in tags:
            code = resolve(tag).code
            if code not in self.descriptor.languages:
                raise UnsupportedLanguage(f"engine does not handle {code}")

    def asr(self, audio: WavAudio, lang: str) -> TranscriptionResult:
        self._check_lang(lang)
        text = audio.transcript()
        if text is None:
            raise NoTranscriptChunk("mock engine needs a txts chunk to transcribe")
        return TranscriptionResult(
            text=text,
            lang=resolve(lang).code,
            confidence=1.0,
            audio_duration_ms=audio.duration_ms,
        )

    def t2tt(self, text: str, src: str, dst: str) -> str:
        self._check_lang(src, dst)
        src_code, dst_code = resolve(src).code, resolve(dst).code
        if src_code == dst_code:
            return text
        return f"[{dst_code}] {text}"

    def s2st(self, audio: WavAudio, src: str, dst: str) -> WavAudio:
        translated = self.t2tt(self.asr(audio, src).text, src, dst)
        return media.synth_tone(translated)

    def close(self):
        pass


def _write_message(stream, doc: dict):
    data = json.dumps(doc).encode("utf-8")
    stream.write(struct.pack(">I", len(data)) + data)
    stream.flush()


def _read_message(stream) -> dict | None:
    header = stream.read(4)
    if len(header) < 4:
        return None
    (length,) = struct.unpack(">I", header)
    data = stream.read(length)
    if len(data) < length:
        return None
    return json.loads(data.decode("utf-8"))


class ExternalEngine:
    """Adapter for an engine executable speaking the wire protocol.

    The node spawns the executable and exchanges length-prefixed JSON
    messages on its standard streams. The engine's first message is a
    handshake {engine_id, capabilities, languages}; afterwards every
    request {id, op, src, dst, text?, audio_b64?} gets one response
    {id, ok, text?, audio_b64?, confidence?, error?}. Requests are
    serialized here; callers only see request/response with a timeout.
    """

    def __init__(self, command: list[str] | str, timeout_s: float = DEFAULT_TIMEOUT_S):
        self.timeout_s = timeout_s
        argv = [command] if isinstance(command, str) else list(command)
        try:
            self._proc = subprocess.Popen(
                argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE
            )
        except OSError as e:
            raise EngineUnavailable(f"cannot start engine {argv[0]!r}: {e}") from e
        self._lock = threading.Lock()
        self._next_id = 0
        hello = self._read_with_timeout()
        if hello is None or "engine_id" not in hello:
            self._kill()
            raise EngineUnavailable("engine handshake failed")
        self.descriptor = EngineDescriptor(
            engine_id=hello["engine_id"],
            capabilities=frozenset(hello.get("capabilities", [])),
            languages=frozenset(hello.get("languages", [])),
        )

    def _read_with_timeout(self) -> dict | None:
        result: list = [None]

        def reader():
            try:
                result[0] = _read_message(self._proc.stdout)
            except Exception:
                result[0] = None

        t = threading.Thread(target=reader, daemon=True)
        t.start()
        t.join(self.timeout_s)
        if t.is_alive():
            self._kill()
            raise EngineUnavailable(f"engine timed out after {self.timeout_s} s")
        return result[0]

    def _request(self, doc: dict) -> dict:
        with self._lock:
            if self._proc.poll() is not None:
                raise EngineUnavailable("engine process has exited")
            self._next_id += 1
            doc["id"] = self._next_id
            try:
                _write_message(self._proc.stdin, doc)
            except (OSError, ValueError) as e:
                raise EngineUnavailable(f"engine write failed: {e}") from e
            resp = self._read_with_timeout()
        if resp is None or resp.get("id") != doc["id"]:
            raise EngineUnavailable("engine returned no matching response")
        if not resp.get("ok"):
            error = resp.get("error", "engine error")
            if "language" in error.lower():
                raise UnsupportedLanguage(error)
            raise EngineUnavailable(error)
        return resp

    def _check_lang(self, *tags: str):
        for tag in tags:
            code = resolve(tag).code
            if code not in self.descriptor.languages:
                raise UnsupportedLanguage(f"engine does not handle {code}")

    def asr(self, audio: WavAudio, lang: str) -> TranscriptionResult:
        self._check_lang(lang)
        code = resolve(lang).code
        resp = self._request(
            {
                "op": "asr",
                "src": code,
                "dst": code,
                "audio_b64": base64.b64encode(media.write_wav(audio)).decode("ascii"),
            }
        )
        return TranscriptionResult(
            text=resp.get("text", ""),
            lang=code,
            confidence=float(resp.get("confidence", 0.0)),
            audio_duration_ms=audio.duration_ms,
        )

    def t2tt(self, text: str, src: str, dst: str) -> str:
        self._check_lang(src, dst)
        resp = self._request(
            {"op": "t2tt", "src": resolve(src).code, "dst": resolve(dst).code, "text": text}
        )
        return resp.get("text", "")

    def s2st(self, audio: WavAudio, src: str, dst: str) -> WavAudio:
        self._check_lang(src, dst)
        resp = self._request(
            {
                "op": "s2st",
                "src": resolve(src).code,
                "dst": resolve(dst).code,
                "audio_b64": base64.b64encode(media.write_wav(audio)).decode("ascii"),
            }
        )
        try:
            return media.parse_wav(base64.b64decode(resp.get("audio_b64", "")))
        except Exception as e:
            raise EngineUnavailable(f"engine returned unusable audio: {e}") from e

    def _kill(self):
        try:
            self._proc.kill()
        except OSError:
            pass

    def close(self):
        try:
            self._proc.stdin.close()
        except OSError:
            pass
        try:
            self._proc.wait(timeout=2)
        except subprocess.TimeoutExpired:
            self._kill()


Engine = MockEngine | ExternalEngine
