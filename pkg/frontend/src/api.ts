/**
 * The one API layer: every request goes through a single base URL and
 * carries the bearer token when present. A 401 clears the session so the
 * router can bounce to login.
 */

import { blobBytes } from "./wav.js";

export interface Language {
  code: string;
  display_name: string;
}

export interface Profile {
  username: string;
  default_lang: string;
  address: string;
  created_at: number;
  picture_ref: string | null;
}

export interface FeedItem {
  post_id: string;
  author: string;
  lang: string;
  created_at: number;
  viewer_lang: string;
  text: string;
  audio_source: "original" | "translated";
  audio_url: string;
  post_tx_hash: string;
  translation_tx_hash: string | null;
  engine_id: string | null;
  translation_error?: string;
}

export interface TimelinePage {
  items: FeedItem[];
  next_cursor: string | null;
}

export interface CreatedPost {
  post_id: string;
  lang: string;
  transcript: string;
  created_at: number;
  audio_hash: string;
  tx_hash: string;
  block_height: number;
  block_hash: string;
  cost_wei: string;
}

export interface TxCard {
  tx_hash: string;
  block_height: number;
  block_hash: string;
  sender_address: string;
  kind: string;
  text: string;
  timestamp_ms: number;
  cost_wei: string;
}

export interface TxDetails {
  post: TxCard;
  translation?: TxCard;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
  }
}

export class ApiClient {
  token: string | null = null;
  profile: Profile | null = null;

  constructor(
    public baseUrl: string,
    private fetchImpl: typeof fetch = (...args) => fetch(...args),
  ) {}

  get loggedIn(): boolean {
    return this.token !== null;
  }

  clearSession(): void {
    this.token = null;
    this.profile = null;
  }

  private async request(
    method: string,
    path: string,
    body?: BodyInit,
    contentType?: string,
  ): Promise<Response> {
    const headers: Record<string, string> = {};
    if (this.token) headers["Authorization"] = `Bearer ${this.token}`;
    if (contentType) headers["Content-Type"] = contentType;
    const resp = await this.fetchImpl(this.baseUrl + path, { method, headers, body });
    if (!resp.ok) {
      if (resp.status === 401) this.clearSession();
      let code = "http";
      let message = `HTTP ${resp.status}`;
      try {
        const doc = await resp.json();
        code = doc.error ?? code;
        message = doc.message ?? message;
      } catch {
        /* non-JSON error body */
      }
      throw new ApiError(resp.status, code, message);
    }
    return resp;
  }

  private async json<T>(method: string, path: string, body?: unknown): Promise<T> {
    const resp = await this.request(
      method,
      path,
      body === undefined ? undefined : JSON.stringify(body),
      body === undefined ? undefined : "application/json",
    );
    return (await resp.json()) as T;
  }

  async register(username: string, password: string, defaultLang: string): Promise<Profile> {
    return this.json<Profile>("POST", "/api/v1/register", {
      username,
      password,
      default_lang: defaultLang,
    });
  }

  async login(username: string, password: string): Promise<Profile> {
    const doc = await this.json<{ token: string; profile: Profile }>(
      "POST",
      "/api/v1/login",
      { username, password },
    );
    this.token = doc.token;
    this.profile = doc.profile;
    return doc.profile;
  }

  async languages(): Promise<Language[]> {
    return this.json<Language[]>("GET", "/api/v1/languages");
  }

  async getProfile(): Promise<Profile> {
    this.profile = await this.json<Profile>("GET", "/api/v1/profile");
    return this.profile;
  }

  async setDefaultLang(lang: string): Promise<Profile> {
    this.profile = await this.json<Profile>("PUT", "/api/v1/profile", {
      default_lang: lang,
    });
    return this.profile;
  }

  async setPicture(bytes: Blob): Promise<Profile> {
    const resp = await this.request("PUT", "/api/v1/profile/picture", bytes);
    this.profile = (await resp.json()) as Profile;
    return this.profile;
  }

  async follow(username: string): Promise<void> {
    await this.request("POST", `/api/v1/users/${encodeURIComponent(username)}/follow`);
  }

  async unfollow(username: string): Promise<void> {
    await this.request("DELETE", `/api/v1/users/${encodeURIComponent(username)}/follow`);
  }

  async createPost(wav: Blob, lang?: string): Promise<CreatedPost> {
    // multipart/form-data assembled by hand: identical bytes in every
    // runtime, nothing left to differing FormData implementations
    const boundary = "vnodeform" + Math.random().toString(16).slice(2);
    const enc = new TextEncoder();
    const parts: Uint8Array[] = [];
    if (lang) {
      parts.push(
        enc.encode(
          `--${boundary}\r\nContent-Disposition: form-data; name="lang"\r\n\r\n${lang}\r\n`,
        ),
      );
    }
    parts.push(
      enc.encode(
        `--${boundary}\r\nContent-Disposition: form-data; name="audio"; ` +
          `filename="recording.wav"\r\nContent-Type: audio/wav\r\n\r\n`,
      ),
      await blobBytes(wav),
      enc.encode(`\r\n--${boundary}--\r\n`),
    );
    const total = parts.reduce((n, p) => n + p.length, 0);
    const body = new Uint8Array(total);
    let offset = 0;
    for (const part of parts) {
      body.set(part, offset);
      offset += part.length;
    }
    const resp = await this.request(
      "POST",
      "/api/v1/posts",
      body,
      `multipart/form-data; boundary=${boundary}`,
    );
    return (await resp.json()) as CreatedPost;
  }

  async timeline(cursor?: string, limit = 20): Promise<TimelinePage> {
    const params = new URLSearchParams({ limit: String(limit) });
    if (cursor) params.set("cursor", cursor);
    return this.json<TimelinePage>("GET", `/api/v1/timeline?${params}`);
  }

  audioUrl(item: Pick<FeedItem, "audio_url">): string {
    return this.baseUrl + item.audio_url;
  }

  async fetchAudio(item: Pick<FeedItem, "audio_url">): Promise<ArrayBuffer> {
    const resp = await this.request("GET", item.audio_url);
    return resp.arrayBuffer();
  }

  async txDetails(postId: string, lang?: string): Promise<TxDetails> {
    const suffix = lang ? `?lang=${encodeURIComponent(lang)}` : "";
    return this.json<TxDetails>("GET", `/api/v1/posts/${postId}/tx${suffix}`);
  }

  async health(): Promise<{ mode: string; height: number; engine: string }> {
    return this.json("GET", "/api/v1/health");
  }
}
