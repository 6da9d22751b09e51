import { ApiClient, ApiError, TxCard } from "../api.js";
import { clear, el, errorBox, formatEth, formatWhen } from "../dom.js";

function txCard(title: string, tx: TxCard): HTMLElement {
  const row = (label: string, value: string, cls = "") =>
    el("div", { class: "tx-row" },
      el("span", { class: "tx-label" }, label),
      el("code", { class: `tx-value ${cls}`.trim() }, value),
    );
  return el("section", { class: "card tx-card", "data-kind": tx.kind },
    el("h2", {}, title),
    row("block hash", tx.block_hash, "block-hash"),
    row("block height", String(tx.block_height)),
    row("tx hash", tx.tx_hash, "tx-hash"),
    row("sender address", tx.sender_address, "sender-address"),
    el("p", { class: "tx-text" }, tx.text),
    row("timestamp", formatWhen(tx.timestamp_ms)),
    row("cost", `${tx.cost_wei} wei (${formatEth(tx.cost_wei)})`),
  );
}

/** Transaction details for a post: the post tx, plus the translation tx
 * when the post was translated for this viewer. */
export async function renderTxDetails(
  root: HTMLElement,
  api: ApiClient,
  navigate: (hash: string) => void,
  postId: string,
): Promise<void> {
  clear(root);
  const back = el("button", { class: "link" }, "← timeline");
  back.onclick = () => navigate("#/timeline");
  root.append(el("header", { class: "topbar" }, el("h1", {}, "Transaction details"), back));

  try {
    const details = await api.txDetails(postId, api.profile?.default_lang);
    root.append(txCard("Post", details.post));
    if (details.translation) {
      root.append(txCard("Translation", details.translation));
    }
  } catch (e) {
    if (e instanceof ApiError && e.status === 404) {
      root.append(el("div", { class: "card" }, el("h2", {}, "Post not found")));
    } else {
      root.append(errorBox(e instanceof ApiError ? e.message : String(e)));
    }
  }
}
