/** Tiny DOM helpers; no framework, no virtual anything. */

export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  ...children: (Node | string)[]
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    if (key === "class") node.className = value;
    else node.setAttribute(key, value);
  }
  node.append(...children);
  return node;
}

export function clear(node: HTMLElement): HTMLElement {
  node.replaceChildren();
  return node;
}

export function errorBox(message: string): HTMLElement {
  return el("div", { class: "error", role: "alert" }, message);
}

export function formatWhen(unixMs: number): string {
  return new Date(unixMs).toLocaleString();
}

export function formatEth(costWei: string): string {
  const eth = Number(costWei) / 1e18;
  return `${eth.toFixed(9)} ETH`;
}
