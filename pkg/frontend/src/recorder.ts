/**
 * Microphone capture with a strict state machine so recordings can never
 * overlap: idle -> recording -> processing -> recorded (then replay or
 * discard). The captured stream is decoded and re-encoded client-side to
 * 16-bit PCM mono WAV, the only format the node accepts.
 *
 * Constructor dependencies are injectable so the machine is testable
 * without a real microphone.
 */

import { audioToWavBlob, blobBytes, DecodedAudio } from "./wav.js";

export type RecorderState = "idle" | "recording" | "processing" | "recorded";

export interface RecorderHandle {
  start(): void;
  stop(): void;
  ondataavailable: ((e: { data: Blob }) => void) | null;
  onstop: (() => void) | null;
}

export interface RecorderDeps {
  getUserMedia(constraints: MediaStreamConstraints): Promise<MediaStream>;
  createRecorder(stream: MediaStream): RecorderHandle;
  decodeAudio(data: ArrayBuffer): Promise<DecodedAudio>;
}

export function browserDeps(): RecorderDeps {
  return {
    getUserMedia: (c) => navigator.mediaDevices.getUserMedia(c),
    // MediaRecorder's event-handler properties are declared with its own
    // `this` type; structurally it satisfies RecorderHandle
    createRecorder: (stream) => new MediaRecorder(stream) as unknown as RecorderHandle,
    decodeAudio: (data) => new AudioContext().decodeAudioData(data),
  };
}

export class Recorder {
  state: RecorderState = "idle";
  wavBlob: Blob | null = null;
  onchange: (() => void) | null = null;

  private stream: MediaStream | null = null;
  private rec: RecorderHandle | null = null;
  private chunks: Blob[] = [];

  constructor(private deps: RecorderDeps) {}

  private setState(state: RecorderState) {
    this.state = state;
    this.onchange?.();
  }

  async start(): Promise<void> {
    if (this.state === "recording" || this.state === "processing") {
      throw new Error(`cannot start while ${this.state}`);
    }
    this.wavBlob = null;
    this.stream = await this.deps.getUserMedia({ audio: true });
    this.rec = this.deps.createRecorder(this.stream);
    this.chunks = [];
    this.rec.ondataavailable = (e) => this.chunks.push(e.data);
    this.rec.start();
    this.setState("recording");
  }

  async stop(): Promise<Blob> {
    if (this.state !== "recording" || !this.rec) {
      throw new Error("not recording");
    }
    this.setState("processing");
    await new Promise<void>((resolve) => {
      this.rec!.onstop = () => resolve();
      this.rec!.stop();
    });
    this.stream?.getTracks().forEach((t) => t.stop());
    this.stream = null;

    const raw = await blobBytes(new Blob(this.chunks));
    const copy = new ArrayBuffer(raw.byteLength);
    new Uint8Array(copy).set(raw);
    const decoded = await this.deps.decodeAudio(copy);
    this.wavBlob = audioToWavBlob(decoded);
    this.setState("recorded");
    return this.wavBlob;
  }

  discard(): void {
    if (this.state === "recording") {
      this.rec?.stop();
      this.stream?.getTracks().forEach((t) => t.stop());
      this.stream = null;
    }
    this.wavBlob = null;
    this.chunks = [];
    this.setState("idle");
  }
}
