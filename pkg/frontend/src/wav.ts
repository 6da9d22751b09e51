/**
 * WAV helpers: encode captured audio to the one format the node accepts
 * (16-bit PCM mono RIFF/WAVE) and pick apart server WAVs, including the
 * "txts" transcript chunk the mock engine embeds.
 */

export interface DecodedAudio {
  numberOfChannels: number;
  sampleRate: number;
  length: number;
  getChannelData(channel: number): Float32Array;
}

/** Blob bytes with a FileReader fallback for runtimes without Blob.arrayBuffer. */
export async function blobBytes(blob: Blob): Promise<Uint8Array> {
  if (typeof blob.arrayBuffer === "function") {
    return new Uint8Array(await blob.arrayBuffer());
  }
  return new Promise((resolve, reject) => {
    const reader = new FileReader();
    reader.onload = () => resolve(new Uint8Array(reader.result as ArrayBuffer));
    reader.onerror = () => reject(reader.error);
    reader.readAsArrayBuffer(blob);
  });
}

export function mixToMono(buffer: DecodedAudio): Float32Array {
  const out = new Float32Array(buffer.length);
  for (let ch = 0; ch < buffer.numberOfChannels; ch++) {
    const data = buffer.getChannelData(ch);
    for (let i = 0; i < buffer.length; i++) out[i] += data[i];
  }
  if (buffer.numberOfChannels > 1) {
    for (let i = 0; i < out.length; i++) out[i] /= buffer.numberOfChannels;
  }
  return out;
}

export function encodeWavMono16(samples: Float32Array, sampleRate: number): ArrayBuffer {
  const dataLen = samples.length * 2;
  const buffer = new ArrayBuffer(44 + dataLen);
  const view = new DataView(buffer);
  let pos = 0;

  const ascii = (s: string) => {
    for (let i = 0; i < s.length; i++) view.setUint8(pos++, s.charCodeAt(i));
  };
  const u32 = (v: number) => {
    view.setUint32(pos, v, true);
    pos += 4;
  };
  const u16 = (v: number) => {
    view.setUint16(pos, v, true);
    pos += 2;
  };

  ascii("RIFF");
  u32(36 + dataLen);
  ascii("WAVE");
  ascii("fmt ");
  u32(16);
  u16(1); // PCM
  u16(1); // mono
  u32(sampleRate);
  u32(sampleRate * 2);
  u16(2); // block align
  u16(16); // bits per sample
  ascii("data");
  u32(dataLen);
  for (let i = 0; i < samples.length; i++) {
    const clamped = Math.max(-1, Math.min(1, samples[i]));
    view.setInt16(pos, clamped < 0 ? clamped * 0x8000 : clamped * 0x7fff, true);
    pos += 2;
  }
  return buffer;
}

export function audioToWavBlob(buffer: DecodedAudio): Blob {
  return new Blob([encodeWavMono16(mixToMono(buffer), buffer.sampleRate)], {
    type: "audio/wav",
  });
}

export interface WavChunk {
  id: string;
  bytes: Uint8Array;
}

export function wavChunks(data: ArrayBuffer): WavChunk[] {
  const view = new DataView(data);
  const bytes = new Uint8Array(data);
  if (data.byteLength < 12) throw new Error("not a RIFF file");
  const tag = (off: number) => String.fromCharCode(...bytes.subarray(off, off + 4));
  if (tag(0) !== "RIFF" || tag(8) !== "WAVE") throw new Error("not a RIFF/WAVE file");

  const chunks: WavChunk[] = [];
  let pos = 12;
  while (pos + 8 <= data.byteLength) {
    const id = tag(pos);
    const size = view.getUint32(pos + 4, true);
    if (pos + 8 + size > data.byteLength) throw new Error(`chunk ${id} truncated`);
    chunks.push({ id, bytes: bytes.slice(pos + 8, pos + 8 + size) });
    pos += 8 + size + (size % 2);
  }
  return chunks;
}

/** Transcript embedded by the mock engine, or null when absent. */
export function transcriptChunk(data: ArrayBuffer): string | null {
  const chunk = wavChunks(data).find((c) => c.id === "txts");
  return chunk ? new TextDecoder().decode(chunk.bytes) : null;
}
