/**
 * Chat panel: image upload, transcript rendering, prompt shortcuts, free-form
 * composer, generation settings. The transcript is always re-rendered from
 * server state so a reload (or another tab) shows exactly what the server
 * holds. One in-flight message per session: send stays disabled while a
 * reply is pending, matching the server's per-session serialization.
 */

import { ApiError, Client, GenerationSettings, SessionView, Turn } from "./api.js";

export interface ChatElements {
  banner: HTMLElement;
  sessionLabel: HTMLElement;
  fileInput: HTMLInputElement;
  thumbnail: HTMLImageElement;
  transcript: HTMLElement;
  shortcuts: HTMLElement;
  composer: HTMLFormElement;
  input: HTMLTextAreaElement | HTMLInputElement;
  send: HTMLButtonElement;
  settings: {
    mode: HTMLSelectElement;
    temperature: HTMLInputElement;
    maxNewTokens: HTMLInputElement;
    seed: HTMLInputElement;
  };
}

export class ChatController {
  sessionId: string | null = null;
  busy = false;
  hasImage = false;

  constructor(
    private readonly client: Client,
    private readonly el: ChatElements,
    private readonly onSessionChange: (id: string | null) => void = () => {},
  ) {
    el.fileInput.addEventListener("change", () => void this.handleUpload());
    el.composer.addEventListener("submit", (event) => {
      event.preventDefault();
      void this.sendText(this.el.input.value);
    });
  }

  showBanner(message: string): void {
    const note = document.createElement("div");
    note.className = "banner";
    const text = document.createElement("span");
    text.textContent = message;
    const dismiss = document.createElement("button");
    dismiss.type = "button";
    dismiss.className = "banner-dismiss";
    dismiss.textContent = "×";
    dismiss.addEventListener("click", () => note.remove());
    note.append(text, dismiss);
    this.el.banner.append(note);
  }

  private surface(err: unknown): void {
    this.showBanner(err instanceof ApiError ? err.message : String(err));
  }

  renderTranscript(turns: Turn[]): void {
    this.el.transcript.textContent = "";
    for (const turn of turns) {
      const bubble = document.createElement("div");
      bubble.className = `bubble ${turn.role}`;
      const text = document.createElement("p");
      text.textContent = turn.text;
      bubble.append(text);
      if (turn.role === "assistant" && turn.latency_ms !== undefined) {
        const badge = document.createElement("span");
        badge.className = "latency-badge";
        badge.textContent = `${Math.round(turn.latency_ms)} ms`;
        bubble.append(badge);
      }
      this.el.transcript.append(bubble);
    }
    this.el.transcript.scrollTop = this.el.transcript.scrollHeight;
  }

  async refreshFromServer(): Promise<SessionView | null> {
    if (!this.sessionId) return null;
    const view = await this.client.getSession(this.sessionId);
    this.hasImage = view.image !== null;
    this.renderTranscript(view.turns);
    return view;
  }

  /** Restore a session (e.g. from the URL) entirely from server state. */
  async restore(sessionId: string): Promise<boolean> {
    try {
      this.sessionId = sessionId;
      await this.refreshFromServer();
      this.el.sessionLabel.textContent = sessionId;
      this.onSessionChange(sessionId);
      return true;
    } catch (err) {
      this.sessionId = null;
      this.onSessionChange(null);
      this.surface(err);
      return false;
    }
  }

  private async ensureSession(): Promise<string> {
    if (!this.sessionId) {
      this.sessionId = await this.client.createSession();
      this.el.sessionLabel.textContent = this.sessionId;
      this.onSessionChange(this.sessionId);
    }
    return this.sessionId;
  }

  async handleUpload(): Promise<void> {
    const file = this.el.fileInput.files?.[0];
    if (!file) return;
    try {
      const sid = await this.ensureSession();
      await this.client.uploadImage(sid, file, file.name);
      this.hasImage = true;
      this.el.thumbnail.src = URL.createObjectURL(file);
      this.el.thumbnail.hidden = false;
      await this.refreshFromServer(); // turns reset server-side on re-upload
    } catch (err) {
      this.surface(err);
    }
  }

  collectSettings(): GenerationSettings | undefined {
    const s = this.el.settings;
    const settings: GenerationSettings = {};
    if (s.mode.value === "greedy" || s.mode.value === "sampled") settings.mode = s.mode.value;
    if (s.temperature.value) settings.temperature = Number(s.temperature.value);
    if (s.maxNewTokens.value) settings.max_new_tokens = Number(s.maxNewTokens.value);
    if (s.seed.value) settings.seed = Number(s.seed.value);
    return Object.keys(settings).length ? settings : undefined;
  }

  renderShortcuts(prompts: string[]): void {
    this.el.shortcuts.textContent = "";
    prompts.forEach((prompt, index) => {
      const button = document.createElement("button");
      button.type = "button";
      button.className = "prompt-shortcut";
      button.dataset.prompt = prompt; // exact server-provided text
      button.textContent = `Prompt ${index + 1}`;
      button.title = prompt;
      button.addEventListener("click", () => void this.sendText(prompt));
      this.el.shortcuts.append(button);
    });
  }

  async sendText(text: string): Promise<void> {
    if (this.busy || !text.trim()) return;
    this.busy = true;
    this.el.send.disabled = true;
    try {
      const sid = await this.ensureSession();
      await this.client.sendMessage(sid, text, this.collectSettings());
      this.el.input.value = "";
      await this.refreshFromServer();
    } catch (err) {
      this.surface(err);
    } finally {
      this.busy = false;
      this.el.send.disabled = false;
    }
  }
}
