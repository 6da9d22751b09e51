import { describe, expect, it } from "vitest";
import { execFileSync } from "node:child_process";
import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { encodeWavMono16, mixToMono, transcriptChunk, wavChunks } from "../src/wav.js";

function sine(n: number, freq = 440, rate = 44100): Float32Array {
  const out = new Float32Array(n);
  for (let i = 0; i < n; i++) out[i] = 0.4 * Math.sin((2 * Math.PI * freq * i) / rate);
  return out;
}

describe("encodeWavMono16", () => {
  it("produces a canonical 44-byte header plus data", () => {
    const wav = encodeWavMono16(new Float32Array(0), 16000);
    expect(wav.byteLength).toBe(44);
    const chunks = wavChunks(wav);
    expect(chunks.map((c) => c.id)).toEqual(["fmt ", "data"]);
  });

  it("encodes fmt fields for 16-bit mono PCM", () => {
    const wav = encodeWavMono16(sine(100), 44100);
    const fmt = wavChunks(wav).find((c) => c.id === "fmt ")!;
    const view = new DataView(fmt.bytes.buffer, fmt.bytes.byteOffset);
    expect(view.getUint16(0, true)).toBe(1); // PCM
    expect(view.getUint16(2, true)).toBe(1); // mono
    expect(view.getUint32(4, true)).toBe(44100);
    expect(view.getUint16(14, true)).toBe(16); // bits
    const data = wavChunks(wav).find((c) => c.id === "data")!;
    expect(data.bytes.length).toBe(200);
  });

  it("clamps out-of-range samples", () => {
    const wav = encodeWavMono16(new Float32Array([2.0, -2.0]), 16000);
    const data = wavChunks(wav).find((c) => c.id === "data")!;
    const view = new DataView(data.bytes.buffer, data.bytes.byteOffset);
    expect(view.getInt16(0, true)).toBe(0x7fff);
    expect(view.getInt16(2, true)).toBe(-0x8000);
  });

  it("is accepted by the node's parser with identical fields", () => {
    // cross-implementation check against the server-side WAV codec
    const wav = encodeWavMono16(sine(1600, 300, 16000), 16000);
    const dir = mkdtempSync(join(tmpdir(), "wavcheck-"));
    const path = join(dir, "probe.wav");
    writeFileSync(path, Buffer.from(wav));
    const result = execFileSync("python3", [
      "-c",
      [
        "import sys, json",
        "from voicenode import media",
        "a = media.parse_wav(open(sys.argv[1], 'rb').read())",
        "print(json.dumps({'rate': a.sample_rate, 'ch': a.channels,"
          + " 'frames': a.frame_count, 'bits': a.bits_per_sample}))",
      ].join("\n"),
      path,
    ]).toString();
    expect(JSON.parse(result)).toEqual({ rate: 16000, ch: 1, frames: 1600, bits: 16 });
  });
});

describe("mixToMono", () => {
  it("averages stereo channels", () => {
    const left = new Float32Array([1, 0, -1]);
    const right = new Float32Array([0, 0, -1]);
    const mono = mixToMono({
      numberOfChannels: 2,
      sampleRate: 16000,
      length: 3,
      getChannelData: (ch) => (ch === 0 ? left : right),
    });
    expect(Array.from(mono)).toEqual([0.5, 0, -1]);
  });
});

describe("transcriptChunk", () => {
  it("finds the txts chunk the mock engine embeds", () => {
    const text = new TextEncoder().encode("water here");
    const body = encodeWavMono16(new Float32Array(4), 16000);
    const out = new Uint8Array(body.byteLength + 8 + text.length);
    out.set(new Uint8Array(body), 0);
    let pos = body.byteLength;
    for (const ch of "txts") out[pos++] = ch.charCodeAt(0);
    new DataView(out.buffer).setUint32(pos, text.length, true);
    out.set(text, pos + 4);
    // fix up the RIFF size field
    new DataView(out.buffer).setUint32(4, out.length - 8, true);
    expect(transcriptChunk(out.buffer)).toBe("water here");
  });

  it("returns null when absent", () => {
    expect(transcriptChunk(encodeWavMono16(new Float32Array(2), 16000))).toBeNull();
  });

  it("rejects non-RIFF bytes", () => {
    expect(() => wavChunks(new TextEncoder().encode("OGGDATA....").buffer)).toThrow();
  });
});
