// Thin typed client over the service's REST + SSE surface. Works in the
// browser and under node (the stream reader uses fetch body streaming, not
// EventSource, so tests can drive the real wire).

import type {
  ClipDoc,
  JointDoc,
  SceneDoc,
  SessionDoc,
  StreamEvent,
  Vec3Tuple,
} from "./types.js";

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(`${status}: ${message}`);
  }
}

async function expectJson<T>(response: Response): Promise<T> {
  if (!response.ok) {
    const body = await response.text();
    throw new ApiError(response.status, body);
  }
  return (await response.json()) as T;
}

export class ArmloopClient {
  constructor(private base: string, private fetcher: typeof fetch = fetch) {}

  private url(path: string): string {
    return this.base.replace(/\/$/, "") + path;
  }

  async uploadScene(sceneText: string): Promise<{ scene_id: string; warnings: string[] }> {
    const r = await this.fetcher(this.url("/scenes"), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: sceneText,
    });
    return expectJson(r);
  }

  async getScene(sceneId: string): Promise<SceneDoc> {
    return expectJson(await this.fetcher(this.url(`/scenes/${sceneId}`)));
  }

  async getChain(): Promise<JointDoc[]> {
    return expectJson(await this.fetcher(this.url("/chain")));
  }

  async createSession(
    sceneId: string,
    instruction: string,
    mode: "reference" | "llm" = "reference",
  ): Promise<SessionDoc> {
    const r = await this.fetcher(this.url("/sessions"), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ scene_id: sceneId, instruction, mode }),
    });
    return expectJson(r);
  }

  async getSession(id: string): Promise<SessionDoc> {
    return expectJson(await this.fetcher(this.url(`/sessions/${id}`)));
  }

  async patchWaypoint(id: string, index: number, position: Vec3Tuple): Promise<SessionDoc> {
    const r = await this.fetcher(this.url(`/sessions/${id}/waypoints/${index}`), {
      method: "PATCH",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ position }),
    });
    return expectJson(r);
  }

  async approve(id: string): Promise<SessionDoc> {
    return expectJson(
      await this.fetcher(this.url(`/sessions/${id}/approve`), { method: "POST" }),
    );
  }

  async execute(id: string): Promise<SessionDoc> {
    return expectJson(
      await this.fetcher(this.url(`/sessions/${id}/execute`), { method: "POST" }),
    );
  }

  async listAnimations(): Promise<string[]> {
    return expectJson(await this.fetcher(this.url("/animations")));
  }

  async getAnimation(name: string): Promise<ClipDoc> {
    return expectJson(await this.fetcher(this.url(`/animations/${name}`)));
  }

  /**
   * Subscribe to the session's server-sent events. Resolves once the stream
   * closes (the service closes it after a terminal status). Returns a
   * cancel function.
   */
  stream(
    id: string,
    onEvent: (event: StreamEvent) => void,
  ): { done: Promise<void>; cancel: () => void } {
    const controller = new AbortController();
    const done = (async () => {
      const r = await this.fetcher(this.url(`/sessions/${id}/stream`), {
        signal: controller.signal,
      });
      if (!r.ok || !r.body) {
        throw new ApiError(r.status, "stream unavailable");
      }
      const reader = r.body.getReader();
      const decoder = new TextDecoder();
      let buffer = "";
      for (;;) {
        const { value, done: eof } = await reader.read();
        if (eof) break;
        buffer += decoder.decode(value, { stream: true });
        let sep;
        while ((sep = buffer.indexOf("\n\n")) >= 0) {
          const chunk = buffer.slice(0, sep);
          buffer = buffer.slice(sep + 2);
          for (const line of chunk.split("\n")) {
            if (line.startsWith("data: ")) {
              onEvent(JSON.parse(line.slice(6)) as StreamEvent);
            }
          }
        }
      }
    })();
    return { done, cancel: () => controller.abort() };
  }
}
