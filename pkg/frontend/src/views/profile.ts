import { ApiClient, ApiError } from "../api.js";
import { clear, el, errorBox } from "../dom.js";

/** Profile setup: picture upload and the default-language picker. */
export async function renderProfile(
  root: HTMLElement,
  api: ApiClient,
  navigate: (hash: string) => void,
): Promise<void> {
  const profile = api.profile ?? (await api.getProfile());
  const errorSlot = el("div");

  const langSelect = el("select", { id: "profile-lang" }) as HTMLSelectElement;
  for (const lang of await api.languages()) {
    langSelect.append(el("option", { value: lang.code }, lang.display_name));
  }
  langSelect.value = profile.default_lang;

  const picture = el("input", {
    id: "profile-picture",
    type: "file",
    accept: "image/*",
  }) as HTMLInputElement;

  const avatar = profile.picture_ref
    ? el("img", {
        class: "avatar",
        src: `${api.baseUrl}/api/v1/profile/picture`,
        alt: "profile picture",
      })
    : el("div", { class: "avatar placeholder" }, profile.username[0].toUpperCase());

  const saveBtn = el("button", { id: "profile-save" }, "Save");
  saveBtn.onclick = async () => {
    try {
      const file = picture.files?.[0];
      if (file) await api.setPicture(file);
      await api.setDefaultLang(langSelect.value);
      await renderProfile(root, api, navigate);
    } catch (e) {
      clear(errorSlot).append(
        errorBox(e instanceof ApiError ? e.message : String(e)),
      );
    }
  };

  const toTimeline = el("button", { class: "secondary" }, "Go to timeline");
  toTimeline.onclick = () => navigate("#/timeline");

  clear(root).append(
    el("div", { class: "card narrow" },
      el("h1", {}, "Profile"),
      errorSlot,
      avatar,
      el("p", {}, el("strong", {}, profile.username)),
      el("p", { class: "muted address", id: "profile-address" },
        `ledger address ${profile.address}`),
      el("label", {}, "Profile picture", picture),
      el("label", {}, "Default language", langSelect),
      saveBtn,
      toTimeline,
    ),
  );
}
