import { ApiClient, ApiError, CreatedPost } from "../api.js";
import { clear, el, errorBox } from "../dom.js";
import { browserDeps, Recorder, RecorderDeps } from "../recorder.js";

/**
 * New voice post: record (with replay before submitting) or pick a WAV
 * file; the language defaults to the profile but can be overridden per
 * post. Nothing touches the network until Submit.
 */
export async function renderNewPost(
  root: HTMLElement,
  api: ApiClient,
  navigate: (hash: string) => void,
  deps: RecorderDeps | null = null,
): Promise<void> {
  const profile = api.profile ?? (await api.getProfile());
  const errorSlot = el("div");
  const recorder = new Recorder(deps ?? browserDeps());
  let pendingWav: Blob | null = null;

  const langSelect = el("select", { id: "post-lang" }) as HTMLSelectElement;
  for (const lang of await api.languages()) {
    langSelect.append(el("option", { value: lang.code }, lang.display_name));
  }
  langSelect.value = profile.default_lang; // pre-selected, overridable

  const replay = el("audio", { controls: "", id: "replay" }) as HTMLAudioElement;
  replay.hidden = true;

  const status = el("p", { class: "muted", id: "record-status" }, "ready");

  const recordBtn = el("button", { id: "record-toggle" }, "● Record");
  const submitBtn = el("button", { id: "post-submit", disabled: "" }, "Submit post");
  const cancelBtn = el("button", { class: "secondary", id: "post-cancel" }, "Cancel");

  const setPending = (wav: Blob | null, label: string) => {
    pendingWav = wav;
    status.textContent = label;
    if (wav) {
      submitBtn.removeAttribute("disabled");
      if (typeof URL.createObjectURL === "function") {
        replay.src = URL.createObjectURL(wav);
        replay.hidden = false;
      }
    } else {
      submitBtn.setAttribute("disabled", "");
      replay.hidden = true;
    }
  };

  recordBtn.onclick = async () => {
    try {
      if (recorder.state === "recording") {
        recordBtn.textContent = "● Record";
        const wav = await recorder.stop();
        setPending(wav, "recorded; replay below, then submit");
      } else {
        setPending(null, "recording…");
        await recorder.start();
        recordBtn.textContent = "■ Stop";
      }
    } catch (e) {
      setPending(null, "ready");
      recordBtn.textContent = "● Record";
      clear(errorSlot).append(
        errorBox(
          "microphone unavailable; grant permission or use the file picker below",
        ),
      );
    }
  };

  const filePick = el("input", {
    id: "post-file",
    type: "file",
    accept: "audio/wav,.wav",
  }) as HTMLInputElement;
  filePick.onchange = () => {
    const file = filePick.files?.[0];
    if (file) {
      recorder.discard();
      recordBtn.textContent = "● Record";
      setPending(file, `file: ${file.name}`);
    }
  };

  submitBtn.onclick = async () => {
    if (!pendingWav) return;
    submitBtn.setAttribute("disabled", "");
    try {
      const created = await api.createPost(pendingWav, langSelect.value);
      renderConfirmation(root, created, navigate);
    } catch (e) {
      submitBtn.removeAttribute("disabled");
      clear(errorSlot).append(
        errorBox(e instanceof ApiError ? `${e.message} — fix and retry` : String(e)),
      );
    }
  };

  cancelBtn.onclick = () => {
    recorder.discard(); // no network request happens for a cancelled draft
    navigate("#/timeline");
  };

  clear(root).append(
    el("div", { class: "card narrow" },
      el("h1", {}, "New voice post"),
      errorSlot,
      el("label", {}, "Language", langSelect),
      el("div", { class: "recorder" }, recordBtn, status, replay),
      el("label", {}, "…or upload a WAV file", filePick),
      el("div", { class: "actions" }, submitBtn, cancelBtn),
    ),
  );
}

function renderConfirmation(
  root: HTMLElement,
  created: CreatedPost,
  navigate: (hash: string) => void,
): void {
  const toTimeline = el("button", {}, "Back to timeline");
  toTimeline.onclick = () => navigate("#/timeline");
  const toTx = el("button", { class: "secondary", id: "confirm-tx" }, "View transaction");
  toTx.onclick = () => navigate(`#/tx/${created.post_id}`);

  clear(root).append(
    el("div", { class: "card narrow", id: "post-confirmation" },
      el("h1", {}, "Posted"),
      el("p", {}, "Transcript: ", el("strong", { id: "confirm-transcript" }, created.transcript)),
      el("p", { class: "address" }, "Ledger tx: ",
        el("code", { id: "confirm-tx-hash" }, created.tx_hash)),
      el("div", { class: "actions" }, toTimeline, toTx),
    ),
  );
}
