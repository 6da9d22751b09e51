import { ApiClient, ApiError, FeedItem } from "../api.js";
import { clear, el, errorBox, formatWhen } from "../dom.js";

function feedCard(
  api: ApiClient,
  item: FeedItem,
  navigate: (hash: string) => void,
): HTMLElement {
  // the audio URL already targets the viewer's language: translated
  // speech iff the item was translated
  const player = el("audio", {
    controls: "",
    preload: "none",
    src: api.audioUrl(item),
    "data-source": item.audio_source,
  });

  const txBtn = el("button", { class: "link tx-button" }, "transaction");
  txBtn.onclick = () => navigate(`#/tx/${item.post_id}`);

  const badge =
    item.audio_source === "translated"
      ? el("span", { class: "badge" }, `translated from ${item.lang}`)
      : el("span", { class: "badge original" }, "original");

  const card = el("article", { class: "card post", "data-post-id": item.post_id },
    el("header", {},
      el("strong", {}, item.author),
      el("span", { class: "muted" }, ` · ${formatWhen(item.created_at)} · `),
      badge,
    ),
    el("p", { class: "post-text" }, item.text),
    player,
    el("footer", {}, txBtn),
  );
  if (item.translation_error) {
    card.append(errorBox(`translation unavailable: ${item.translation_error}`));
  }
  return card;
}

/** The timeline: followed users' posts, resolved into the viewer's language. */
export async function renderTimeline(
  root: HTMLElement,
  api: ApiClient,
  navigate: (hash: string) => void,
): Promise<void> {
  clear(root);
  const list = el("div", { class: "feed" });
  const errorSlot = el("div");

  const profileBtn = el("button", { class: "link" }, api.profile?.username ?? "profile");
  profileBtn.onclick = () => navigate("#/profile");
  const logoutBtn = el("button", { class: "link" }, "log out");
  logoutBtn.onclick = () => {
    api.clearSession();
    navigate("#/login");
  };

  // floating action button: start a new voice post
  const fab = el("button", { class: "fab", id: "new-post-fab", title: "New voice post" }, "+");
  fab.onclick = () => navigate("#/new");

  root.append(
    el("header", { class: "topbar" },
      el("h1", {}, "Timeline"),
      el("nav", {}, profileBtn, logoutBtn),
    ),
    errorSlot,
    list,
    fab,
  );

  const loadPage = async (cursor?: string) => {
    try {
      const page = await api.timeline(cursor);
      for (const item of page.items) list.append(feedCard(api, item, navigate));
      if (page.items.length === 0 && !cursor) {
        list.append(
          el("p", { class: "muted empty" },
            "Nothing here yet. Follow someone, or tap + to post."),
        );
      }
      if (page.next_cursor) {
        const more = el("button", { class: "secondary", id: "load-more" }, "Load more");
        more.onclick = () => {
          more.remove();
          void loadPage(page.next_cursor!);
        };
        list.append(more);
      }
    } catch (e) {
      if (e instanceof ApiError && e.status === 401) {
        navigate("#/login");
        return;
      }
      clear(errorSlot).append(errorBox(e instanceof ApiError ? e.message : String(e)));
    }
  };
  await loadPage();
}
