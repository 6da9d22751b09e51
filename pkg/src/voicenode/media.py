"""WAV media handling: parsing, canonical writing, tone synthesis, hashing.

Only 16-bit PCM RIFF/WAVE is accepted; one encoding keeps audio hashes
and golden fixtures stable, and browsers can transcode before upload.
Unknown chunks are preserved in order so the "txts" transcript chunk
(see below) survives storage round-trips.

The "txts" chunk is the mock engine's ground-truth transport: chunk id
ASCII ``txts``, body is the UTF-8 transcript with no terminator, padded
to even length per RIFF. Real engines ignore it.
"""

from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import NotRiff, TooLarge, TooLong, TruncatedChunk, UnsupportedEncoding

TRANSCRIPT_CHUNK_ID = b"txts"

DEFAULT_MAX_BYTES = 10 * 1024 * 1024
DEFAULT_MAX_SECONDS = 120

MIN_SAMPLE_RATE = 8000
MAX_SAMPLE_RATE = 48000

# Mock tone recipe constants (shared with the engine's s2st contract).
TONE_SAMPLE_RATE = 16000
TONE_AMPLITUDE = 0.3
TONE_BASE_HZ = 220
TONE_STEP_HZ = 55
TONE_MS_PER_WORD = 50
TONE_MIN_MS = 250


@dataclass
class WavAudio:
    """Decoded 16-bit PCM audio plus any extra RIFF chunks, in order."""

    sample_rate: int
    channels: int
    frames: bytes
    bits_per_sample: int = 16
    extra_chunks: list[tuple[bytes, bytes]] = field(default_factory=list)

    @property
    def frame_count(self) -> int:
        return len(self.frames) // (self.channels * 2)

    @property
    def duration_ms(self) -> int:
        return self.frame_count * 1000 // self.sample_rate

    def chunk(self, chunk_id: bytes) -> bytes | None:
        """Body of the first extra chunk with this id, or None."""
        for cid, body in self.extra_chunks:
            if cid == chunk_id:
                return body
        return None

    def transcript(self) -> str | None:
        body = self.chunk(TRANSCRIPT_CHUNK_ID)
        return None if body is None else body.decode("utf-8")


def parse_wav(
    data: bytes,
    max_bytes: int = DEFAULT_MAX_BYTES,
    max_seconds: int = DEFAULT_MAX_SECONDS,
) -> WavAudio:
    """Parse RIFF/WAVE bytes into WavAudio.

    Requires a 16-byte PCM "fmt " chunk and a "data" chunk; all other
    chunks are preserved verbatim in file order. Raises NotRiff,
    UnsupportedEncoding, TooLarge, TooLong, or TruncatedChunk.
    """
    if len(data) > max_bytes:
        raise TooLarge(f"WAV is {len(data)} bytes, limit {max_bytes}")
    if len(data) < 12:
        raise NotRiff("too short for a RIFF header")
    if data[0:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise NotRiff("missing RIFF/WAVE signature")

    fmt: tuple[int, int, int] | None = None  # (channels, sample_rate, bits)
    frames: bytes | None = None
    extra: list[tuple[bytes, bytes]] = []

    pos = 12
    while pos < len(data):
        if pos + 8 > len(data):
            raise TruncatedChunk(f"chunk header truncated at offset {pos}")
        cid = data[pos : pos + 4]
        (size,) = struct.unpack_from("<I", data, pos + 4)
        body_start = pos + 8
        if body_start + size > len(data):
            raise TruncatedChunk(f"chunk {cid!r} overruns file end")
        body = data[body_start : body_start + size]
        pos = body_start + size + (size & 1)  # skip RIFF pad byte

        if cid == b"fmt ":
            if fmt is not None:
                raise NotRiff("duplicate fmt chunk")
            if size != 16:
                raise UnsupportedEncoding("only the 16-byte PCM fmt chunk is supported")
            tag, channels, rate, byte_rate, block_align, bits = struct.unpack(
                "<HHIIHH", body
            )
            if tag != 1:
                raise UnsupportedEncoding(f"compression tag {tag}, want PCM (1)")
            if bits != 16:
                raise UnsupportedEncoding(f"{bits}-bit PCM, want 16")
            if channels not in (1, 2):
                raise UnsupportedEncoding(f"{channels} channels, want 1 or 2")
            if not MIN_SAMPLE_RATE <= rate <= MAX_SAMPLE_RATE:
                raise UnsupportedEncoding(f"sample rate {rate} outside 8000-48000")
            if block_align != channels * 2 or byte_rate != rate * channels * 2:
                raise UnsupportedEncoding("fmt byte_rate/block_align inconsistent")
            fmt = (channels, rate, bits)
        elif cid == b"data":
            if frames is not None:
                raise NotRiff("duplicate data chunk")
            frames = body
        else:
            extra.append((cid, body))

    if fmt is None or frames is None:
        raise TruncatedChunk("missing fmt or data chunk")
    channels, rate, bits = fmt
    if len(frames) % (channels * 2) != 0:
        raise TruncatedChunk("data length not a whole number of frames")

    audio = WavAudio(
        sample_rate=rate,
        channels=channels,
        frames=frames,
        bits_per_sample=bits,
        extra_chunks=extra,
    )
    if audio.frame_count > max_seconds * rate:
        raise TooLong(f"audio longer than {max_seconds} s")
    return audio


def _chunk_bytes(cid: bytes, body: bytes) -> bytes:
    out = cid + struct.pack("<I", len(body)) + body
    if len(body) & 1:
        out += b"\x00"
    return out


def write_wav(audio: WavAudio) -> bytes:
    """Serialize to the canonical byte layout.

    fmt then data then extra chunks in stored order; every chunk even-
    padded. Identical WavAudio values serialize to identical bytes.
    """
    fmt_body = struct.pack(
        "<HHIIHH",
        1,
        audio.channels,
        audio.sample_rate,
        audio.sample_rate * audio.channels * 2,
        audio.channels * 2,
        16,
    )
    chunks = _chunk_bytes(b"fmt ", fmt_body) + _chunk_bytes(b"data", audio.frames)
    for cid, body in audio.extra_chunks:
        chunks += _chunk_bytes(cid, body)
    return b"RIFF" + struct.pack("<I", 4 + len(chunks)) + b"WAVE" + chunks


def tone_frequency_hz(text: str) -> int:
    """Deterministic tone pitch for a transcript: 220 + (H[0] mod 16) * 55."""
    first = hashlib.sha256(text.encode("utf-8")).digest()[0]
    return TONE_BASE_HZ + (first % 16) * TONE_STEP_HZ


def synth_tone(text: str) -> WavAudio:
    """Synthesize the deterministic mock voice for a transcript.

    16-bit mono 16 kHz sine at tone_frequency_hz(text), amplitude 0.3
    full-scale, duration max(250 ms, 50 ms per word), with the
    transcript attached as a "txts" chunk.
    """
    duration_ms = max(TONE_MIN_MS, TONE_MS_PER_WORD * len(text.split()))
    n = duration_ms * TONE_SAMPLE_RATE // 1000
    f = tone_frequency_hz(text)
    phase = 2.0 * math.pi * f * np.arange(n, dtype=np.float64) / TONE_SAMPLE_RATE
    samples = np.rint(TONE_AMPLITUDE * 32767.0 * np.sin(phase)).astype("<i2")
    return WavAudio(
        sample_rate=TONE_SAMPLE_RATE,
        channels=1,
        frames=samples.tobytes(),
        extra_chunks=[(TRANSCRIPT_CHUNK_ID, text.encode("utf-8"))],
    )


def audio_hash(data: bytes) -> bytes:
    """SHA-256 of the exact file bytes as stored."""
    return hashlib.sha256(data).digest()
