/**
 * In-memory fake of the diagnosis service, faithful to the HTTP contract:
 * same endpoints, same error envelope, same status codes. Installed as a
 * fetch replacement so UI flows can run without a Python process.
 */

export const CANONICAL_PROMPTS = [
  "Could you describe the skin disease in this image for me?",
  "Please provide a paragraph listing additional features you observed in the image.",
  "Based on the previous information, please provide a detailed explanation of the cause of this skin disease.",
  "What treatment and medication should be recommended for this case?",
];

interface FakeSession {
  session_id: string;
  created_at: number;
  turns: { role: string; text: string; timestamp: number; latency_ms?: number }[];
  image: { bytes: number; width: number; height: number; embedding_cached: boolean } | null;
}

export class FakeServer {
  sessions = new Map<string, FakeSession>();
  records: any[] = [];
  down = false;
  private counter = 0;

  private json(body: unknown, status = 200): Response {
    return new Response(JSON.stringify(body), {
      status,
      headers: { "Content-Type": "application/json" },
    });
  }

  private error(status: number, code: string, message: string): Response {
    return this.json({ error: { code, message } }, status);
  }

  fetch = async (input: RequestInfo | URL, init?: RequestInit): Promise<Response> => {
    if (this.down) throw new TypeError("fetch failed: connection refused");
    const url = new URL(String(input), "http://testserver");
    const path = url.pathname;
    const method = (init?.method ?? "GET").toUpperCase();

    if (method === "GET" && path === "/prompts") {
      return this.json({ prompts: CANONICAL_PROMPTS });
    }
    if (method === "GET" && path === "/healthz") {
      return this.json({ status: "ok", ready: true });
    }
    if (method === "POST" && path === "/sessions") {
      const id = (++this.counter).toString(16).padStart(32, "0");
      this.sessions.set(id, {
        session_id: id,
        created_at: Date.now() / 1000,
        turns: [],
        image: null,
      });
      return this.json({ session_id: id }, 201);
    }
    const sessionMatch = path.match(/^\/sessions\/([0-9a-f]+)(\/image|\/message)?$/);
    if (sessionMatch) {
      const session = this.sessions.get(sessionMatch[1]);
      if (!session) return this.error(404, "session_not_found", "unknown or expired session");
      if (!sessionMatch[2] && method === "GET") {
        return this.json({ ...session, settings: { mode: "greedy", temperature: 1, max_new_tokens: 48, seed: 0 } });
      }
      if (sessionMatch[2] === "/image" && method === "POST") {
        const file = (init?.body as FormData).get("file") as File;
        if (!file || (file.type && !file.type.startsWith("image/"))) {
          return this.error(415, "unsupported_media", `expected an image upload, got '${file?.type}'`);
        }
        session.image = { bytes: file.size, width: 64, height: 64, embedding_cached: true };
        session.turns = [];
        return this.json(session.image);
      }
      if (sessionMatch[2] === "/message" && method === "POST") {
        const body = JSON.parse(String(init?.body));
        if (!session.image) {
          return this.error(412, "image_required", "no image uploaded yet; upload an image first");
        }
        if (!body.text || !String(body.text).trim()) {
          return this.error(400, "invalid_input", "message text must be non-empty");
        }
        const now = Date.now() / 1000;
        session.turns.push({ role: "user", text: body.text, timestamp: now });
        session.turns.push({
          role: "assistant",
          text: "This image shows Erythema.",
          timestamp: now,
          latency_ms: 12.5,
        });
        return this.json({ reply: "This image shows Erythema.", truncated: false, latency_ms: 12.5 });
      }
    }
    if (method === "POST" && path === "/eval/records") {
      const record = JSON.parse(String(init?.body));
      const ratings = record.ratings ?? {};
      const missing = [1, 2, 3, 4, 5, 6, 7].filter((i) => !(String(i) in ratings));
      if (missing.length) {
        return this.error(400, "invalid_input", `missing items: [${missing.join(", ")}]`);
      }
      this.records.push(record);
      return this.json({ accepted: true, count: this.records.length }, 201);
    }
    if (method === "GET" && path === "/eval/records") {
      return this.json({ records: this.records });
    }
    return this.error(404, "not_found", `no route ${method} ${path}`);
  };
}

export function installFakeServer(): FakeServer {
  const server = new FakeServer();
  globalThis.fetch = server.fetch as typeof fetch;
  return server;
}
