import { ApiClient, ApiError } from "../api.js";
import { clear, el, errorBox } from "../dom.js";

/** Combined login / registration screen. */
export async function renderLogin(
  root: HTMLElement,
  api: ApiClient,
  navigate: (hash: string) => void,
): Promise<void> {
  const errorSlot = el("div");
  const username = el("input", { id: "login-username", placeholder: "username" });
  const password = el("input", {
    id: "login-password",
    type: "password",
    placeholder: "password",
  });

  const langSelect = el("select", { id: "register-lang" });
  try {
    for (const lang of await api.languages()) {
      langSelect.append(el("option", { value: lang.code }, lang.display_name));
    }
    (langSelect as HTMLSelectElement).value = "eng";
  } catch {
    langSelect.append(el("option", { value: "eng" }, "English"));
  }

  const showError = (e: unknown) => {
    clear(errorSlot).append(
      errorBox(e instanceof ApiError ? e.message : "cannot reach the node"),
    );
  };

  const loginBtn = el("button", { id: "login-submit" }, "Log in");
  loginBtn.onclick = async () => {
    try {
      await api.login(
        (username as HTMLInputElement).value.trim(),
        (password as HTMLInputElement).value,
      );
      navigate("#/timeline");
    } catch (e) {
      showError(e);
    }
  };

  const registerBtn = el("button", { id: "register-submit" }, "Create account");
  registerBtn.onclick = async () => {
    try {
      const name = (username as HTMLInputElement).value.trim();
      const pass = (password as HTMLInputElement).value;
      await api.register(name, pass, (langSelect as HTMLSelectElement).value);
      await api.login(name, pass);
      navigate("#/profile");
    } catch (e) {
      showError(e);
    }
  };

  clear(root).append(
    el("div", { class: "card narrow" },
      el("h1", {}, "voicenode"),
      el("p", { class: "muted" }, "voice posts, any language, verifiable"),
      errorSlot,
      el("label", {}, "Username", username),
      el("label", {}, "Password", password),
      loginBtn,
      el("hr", {}),
      el("label", {}, "Default language (for new accounts)", langSelect),
      registerBtn,
    ),
  );
}
