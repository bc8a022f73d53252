/**
 * Typed client for the local diagnosis service. Only documented same-origin
 * endpoints are used; there are no third-party requests anywhere in the UI.
 */

export interface Turn {
  role: "user" | "assistant";
  text: string;
  timestamp: number;
  latency_ms?: number;
}

export interface ImageMeta {
  bytes: number;
  width: number;
  height: number;
  embedding_cached: boolean;
}

export interface GenerationSettings {
  mode?: "greedy" | "sampled";
  temperature?: number;
  max_new_tokens?: number;
  seed?: number;
}

export interface SessionView {
  session_id: string;
  created_at: number;
  turns: Turn[];
  image: ImageMeta | null;
  settings: Required<GenerationSettings>;
}

export interface MessageReply {
  reply: string;
  truncated: boolean;
  latency_ms: number;
}

export interface EvalRecord {
  case_id: string;
  rater_id: string;
  ratings: Record<string, string>;
  latency_s?: number;
  transcript_ref?: string;
}

export class ApiError extends Error {
  constructor(
    message: string,
    readonly code: string,
    readonly status: number,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

async function asApiError(response: Response): Promise<ApiError> {
  let code = "http_error";
  let message = `HTTP ${response.status}`;
  try {
    const body = await response.json();
    if (body?.error) {
      code = body.error.code ?? code;
      message = body.error.message ?? message; // server's message, verbatim
    }
  } catch {
    /* non-JSON error body; keep the status text */
  }
  return new ApiError(message, code, response.status);
}

export class Client {
  constructor(private readonly baseUrl: string = "") {}

  private async request(path: string, init?: RequestInit): Promise<any> {
    const response = await fetch(this.baseUrl + path, init);
    if (!response.ok) {
      throw await asApiError(response);
    }
    return response.json();
  }

  async getPrompts(): Promise<string[]> {
    const body = await this.request("/prompts");
    return body.prompts;
  }

  async healthz(): Promise<{ status: string; ready: boolean }> {
    return this.request("/healthz");
  }

  async createSession(): Promise<string> {
    const body = await this.request("/sessions", { method: "POST" });
    return body.session_id;
  }

  async getSession(sessionId: string): Promise<SessionView> {
    return this.request(`/sessions/${sessionId}`);
  }

  async uploadImage(sessionId: string, file: Blob, name = "upload.png"): Promise<ImageMeta> {
    const form = new FormData();
    form.append("file", file, name);
    return this.request(`/sessions/${sessionId}/image`, { method: "POST", body: form });
  }

  async sendMessage(
    sessionId: string,
    text: string,
    settings?: GenerationSettings,
  ): Promise<MessageReply> {
    return this.request(`/sessions/${sessionId}/message`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(settings ? { text, settings } : { text }),
    });
  }

  async postEvalRecord(record: EvalRecord): Promise<{ accepted: boolean; count: number }> {
    return this.request("/eval/records", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(record),
    });
  }
}
