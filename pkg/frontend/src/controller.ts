// Glue between the API client, the event stream, and the store.

import { ApiError, Client, type CreateSessionBody } from "./api.js";
import { subscribe, type SseEvent } from "./sse.js";
import { SessionStore } from "./store.js";

export interface ControllerOptions {
  // stream: false settles assistant lines from POST responses instead of
  // the push channel; the user's own lines then stay pending until refresh().
  stream?: boolean;
  fetchFn?: typeof fetch;
}

export class Controller {
  sessionId: string | null = null;
  private abort: AbortController | null = null;
  private streamDone: Promise<void> | null = null;

  constructor(
    private readonly client: Client,
    readonly store: SessionStore,
    private readonly opts: ControllerOptions = {},
  ) {}

  async start(body: CreateSessionBody = {}): Promise<void> {
    const session = await this.client.createSession(body);
    this.sessionId = session.id;
    this.store.settle(session.greeting);
    this.store.applyStep(session.step);
    if (this.opts.stream !== false) {
      this.abort = new AbortController();
      this.streamDone = subscribe(
        this.client.streamUrl(session.id),
        (event) => this.onStreamEvent(event),
        {
          signal: this.abort.signal,
          fetchFn: this.opts.fetchFn,
          headers: this.client.authHeaders(),
        },
      ).catch((err: unknown) => {
        if (err instanceof Error && err.name === "AbortError") return;
        this.store.setBanner(`stream lost: ${err instanceof Error ? err.message : err}`);
      });
    }
  }

  private onStreamEvent(event: SseEvent): void {
    const payload = JSON.parse(event.data);
    if (event.event === "snapshot") {
      for (const dialogue of payload.dialogues) this.store.settle(dialogue);
      this.store.applyStep(payload.step);
    } else if (event.event === "dialogue") {
      this.store.settle(payload);
    } else if (event.event === "step") {
      this.store.applyStep(payload);
    }
  }

  emitActivity(activity: string): Promise<void> {
    return this.send("Wearable", activity);
  }

  sendComment(text: string): Promise<void> {
    return this.send("User", text);
  }

  private async send(speaker: "User" | "Wearable", text: string): Promise<void> {
    if (!this.sessionId) throw new Error("no live session");
    const nonce = makeNonce();
    this.store.optimistic(speaker, text, nonce);
    try {
      const result = await this.client.postEvent(this.sessionId, { speaker, text, nonce });
      this.store.applyStep(result.step);
      this.store.applyState(result.state);
      this.store.recordLatency(result.latency);
      if (this.opts.stream === false) {
        for (const dialogue of result.responses) this.store.settle(dialogue);
      }
    } catch (err) {
      const message =
        err instanceof ApiError
          ? `event rejected: ${err.message}`
          : `event failed: ${err instanceof Error ? err.message : err}`;
      this.store.reject(nonce, message);
    }
  }

  // Re-sync settled entries from the canonical transcript.
  async refresh(): Promise<void> {
    if (!this.sessionId) throw new Error("no live session");
    const transcript = await this.client.transcript(this.sessionId);
    const pending = this.store.entries.filter((e) => e.pending);
    this.store.entries = [];
    for (const dialogue of transcript.dialogues) this.store.settle(dialogue);
    this.store.entries.push(...pending);
    this.store.applyStep(transcript.step);
    this.store.applyState(transcript.state);
  }

  async stop(): Promise<void> {
    this.abort?.abort();
    if (this.streamDone) await this.streamDone;
  }
}

function makeNonce(): string {
  const c = globalThis.crypto as Crypto | undefined;
  if (c?.randomUUID) return c.randomUUID();
  return `n${Date.now().toString(36)}-${Math.floor(Math.random() * 1e9).toString(36)}`;
}
