import { describe, expect, it } from "vitest";

import { Recorder, RecorderDeps, RecorderHandle } from "../src/recorder.js";
import { wavChunks } from "../src/wav.js";

class FakeHandle implements RecorderHandle {
  ondataavailable: ((e: { data: Blob }) => void) | null = null;
  onstop: (() => void) | null = null;
  started = false;

  start() {
    this.started = true;
  }

  stop() {
    this.ondataavailable?.({ data: new Blob([new Uint8Array([1, 2, 3])]) });
    this.onstop?.();
  }
}

function fakeDeps(): { deps: RecorderDeps; handles: FakeHandle[]; stopped: string[] } {
  const handles: FakeHandle[] = [];
  const stopped: string[] = [];
  const stream = {
    getTracks: () => [{ stop: () => stopped.push("track") }],
  } as unknown as MediaStream;
  const deps: RecorderDeps = {
    getUserMedia: async () => stream,
    createRecorder: () => {
      const h = new FakeHandle();
      handles.push(h);
      return h;
    },
    decodeAudio: async () => ({
      numberOfChannels: 1,
      sampleRate: 16000,
      length: 160,
      getChannelData: () => new Float32Array(160).fill(0.1),
    }),
  };
  return { deps, handles, stopped };
}

describe("Recorder", () => {
  it("walks idle -> recording -> processing -> recorded", async () => {
    const { deps } = fakeDeps();
    const rec = new Recorder(deps);
    const seen: string[] = [];
    rec.onchange = () => seen.push(rec.state);

    expect(rec.state).toBe("idle");
    await rec.start();
    expect(rec.state).toBe("recording");
    const wav = await rec.stop();
    expect(rec.state).toBe("recorded");
    expect(seen).toEqual(["recording", "processing", "recorded"]);
    expect(wav).toBeInstanceOf(Blob);
  });

  it("produces 16-bit mono PCM WAV from the decoded capture", async () => {
    const { deps } = fakeDeps();
    const rec = new Recorder(deps);
    await rec.start();
    const wav = await rec.stop();
    const chunks = wavChunks(await wav.arrayBuffer());
    expect(chunks.map((c) => c.id)).toEqual(["fmt ", "data"]);
    const data = chunks.find((c) => c.id === "data")!;
    expect(data.bytes.length).toBe(320); // 160 frames x 2 bytes
  });

  it("refuses overlapping recordings", async () => {
    const { deps } = fakeDeps();
    const rec = new Recorder(deps);
    await rec.start();
    await expect(rec.start()).rejects.toThrow(/cannot start/);
    await rec.stop();
  });

  it("stop without start is an error", async () => {
    const { deps } = fakeDeps();
    await expect(new Recorder(deps).stop()).rejects.toThrow(/not recording/);
  });

  it("releases microphone tracks on stop and discard", async () => {
    const { deps, stopped } = fakeDeps();
    const rec = new Recorder(deps);
    await rec.start();
    await rec.stop();
    expect(stopped).toEqual(["track"]);

    await rec.start();
    rec.discard();
    expect(rec.state).toBe("idle");
    expect(rec.wavBlob).toBeNull();
    expect(stopped).toEqual(["track", "track"]);
  });

  it("discard after recording clears the pending blob", async () => {
    const { deps } = fakeDeps();
    const rec = new Recorder(deps);
    await rec.start();
    await rec.stop();
    expect(rec.wavBlob).not.toBeNull();
    rec.discard();
    expect(rec.wavBlob).toBeNull();
  });
});
