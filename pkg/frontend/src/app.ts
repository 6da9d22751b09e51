/**
 * Hash-routed single-page client. The ApiClient is the only way to the
 * network; the session token persists in localStorage so a reload keeps
 * you logged in, and any 401 drops the session and routes to login.
 */

import { ApiClient } from "./api.js";
import { renderLogin } from "./views/login.js";
import { renderProfile } from "./views/profile.js";
import { renderTimeline } from "./views/timeline.js";
import { renderNewPost } from "./views/newpost.js";
import { renderTxDetails } from "./views/txdetails.js";

const TOKEN_KEY = "vnode_token";

export class App {
  api: ApiClient;
  private renderSeq = 0;

  constructor(
    public root: HTMLElement,
    baseUrl: string,
    private storage: Pick<Storage, "getItem" | "setItem" | "removeItem">,
  ) {
    this.api = new ApiClient(baseUrl);
    const saved = this.storage.getItem(TOKEN_KEY);
    if (saved) this.api.token = saved;
  }

  navigate = (hash: string): void => {
    if (location.hash === hash) {
      void this.route();
    } else {
      location.hash = hash; // hashchange listener re-routes
    }
  };

  async route(): Promise<void> {
    if (this.api.token) this.storage.setItem(TOKEN_KEY, this.api.token);
    else this.storage.removeItem(TOKEN_KEY);

    const hash = location.hash || "#/timeline";
    if (!this.api.loggedIn && hash !== "#/login") {
      this.navigate("#/login");
      return;
    }
    try {
      if (this.api.loggedIn && !this.api.profile) await this.api.getProfile();
    } catch {
      // stale token: fall through to login
    }
    if (!this.api.loggedIn && hash !== "#/login") {
      this.navigate("#/login");
      return;
    }

    // each navigation renders into its own container, attached only if no
    // newer navigation superseded it: a slow view can never clobber the
    // screen the user moved on to
    const seq = ++this.renderSeq;
    const container = document.createElement("div");

    const txMatch = hash.match(/^#\/tx\/([0-9a-f]{32})$/);
    if (hash === "#/login") {
      await renderLogin(container, this.api, this.navigate);
    } else if (hash === "#/profile") {
      await renderProfile(container, this.api, this.navigate);
    } else if (hash === "#/new") {
      await renderNewPost(container, this.api, this.navigate);
    } else if (txMatch) {
      await renderTxDetails(container, this.api, this.navigate, txMatch[1]);
    } else {
      await renderTimeline(container, this.api, this.navigate);
    }
    if (seq === this.renderSeq) {
      this.root.replaceChildren(container);
    }
    if (this.api.token) this.storage.setItem(TOKEN_KEY, this.api.token);
    else this.storage.removeItem(TOKEN_KEY);
  }

  start(): void {
    window.addEventListener("hashchange", () => void this.route());
    void this.route();
  }
}

export function mount(): App {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app element");
  const app = new App(root, location.origin, localStorage);
  app.start();
  return app;
}
