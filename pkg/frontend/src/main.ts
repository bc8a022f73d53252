/**
 * Page wiring: builds the controllers over the static DOM, restores the
 * session named in the URL hash (#s=<id>) from server state, and loads the
 * canonical prompt texts from the service so the shortcut buttons are
 * byte-exact.
 */

import { Client } from "./api.js";
import { ChatController, ChatElements } from "./chat.js";
import { EvalFormController, EvalFormElements } from "./evalform.js";

function byId<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
}

export function wirePage(client: Client = new Client()): {
  chat: ChatController;
  evalForm: EvalFormController;
} {
  const chatElements: ChatElements = {
    banner: byId("banners"),
    sessionLabel: byId("session-id"),
    fileInput: byId<HTMLInputElement>("image-input"),
    thumbnail: byId<HTMLImageElement>("thumbnail"),
    transcript: byId("transcript"),
    shortcuts: byId("prompt-shortcuts"),
    composer: byId<HTMLFormElement>("composer"),
    input: byId<HTMLTextAreaElement>("message-input"),
    send: byId<HTMLButtonElement>("send-button"),
    settings: {
      mode: byId<HTMLSelectElement>("setting-mode"),
      temperature: byId<HTMLInputElement>("setting-temperature"),
      maxNewTokens: byId<HTMLInputElement>("setting-max-new-tokens"),
      seed: byId<HTMLInputElement>("setting-seed"),
    },
  };
  const chat = new ChatController(client, chatElements, (sessionId) => {
    window.location.hash = sessionId ? `s=${sessionId}` : "";
    evalForm.transcriptRef = sessionId;
  });

  const evalElements: EvalFormElements = {
    form: byId<HTMLFormElement>("eval-form"),
    caseId: byId<HTMLInputElement>("eval-case-id"),
    raterId: byId<HTMLInputElement>("eval-rater-id"),
    items: byId("eval-items"),
    submit: byId<HTMLButtonElement>("eval-submit"),
    status: byId("eval-status"),
    retry: byId<HTMLButtonElement>("eval-retry"),
  };
  const evalForm = new EvalFormController(client, evalElements);

  void client
    .getPrompts()
    .then((prompts) => chat.renderShortcuts(prompts))
    .catch((err) => chat.showBanner(`Could not load prompts: ${err.message ?? err}`));

  const match = window.location.hash.match(/^#s=([0-9a-f]+)$/);
  if (match) {
    void chat.restore(match[1]);
  }
  return { chat, evalForm };
}

if (typeof document !== "undefined" && document.getElementById("transcript")) {
  wirePage();
}
