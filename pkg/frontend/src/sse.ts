// Incremental server-sent-events parsing over a streaming fetch body.
// No EventSource dependency: the session server's stream works with plain
// GET semantics, and fetch lets us pass auth headers and abort signals.

export interface SseEvent {
  event: string;
  data: string;
  id: string | null;
}

export class SseParser {
  private buffer = "";

  // Feed one chunk, get every frame completed by it. Partial frames stay
  // buffered until the terminating blank line arrives.
  push(chunk: string): SseEvent[] {
    this.buffer += chunk;
    const events: SseEvent[] = [];
    let split: number;
    while ((split = this.buffer.indexOf("\n\n")) !== -1) {
      const frame = this.buffer.slice(0, split);
      this.buffer = this.buffer.slice(split + 2);
      const event = parseFrame(frame);
      if (event) events.push(event);
    }
    return events;
  }
}

function parseFrame(frame: string): SseEvent | null {
  let event = "message";
  let id: string | null = null;
  const data: string[] = [];
  for (const raw of frame.split("\n")) {
    const line = raw.endsWith("\r") ? raw.slice(0, -1) : raw;
    if (!line || line.startsWith(":")) continue;
    const sep = line.indexOf(":");
    const field = sep === -1 ? line : line.slice(0, sep);
    let value = sep === -1 ? "" : line.slice(sep + 1);
    if (value.startsWith(" ")) value = value.slice(1);
    if (field === "event") event = value;
    else if (field === "data") data.push(value);
    else if (field === "id") id = value;
  }
  if (data.length === 0) return null;
  return { event, data: data.join("\n"), id };
}

export interface SubscribeOptions {
  fetchFn?: typeof fetch;
  headers?: Record<string, string>;
  signal?: AbortSignal;
}

// Resolves when the stream ends; rejects on transport errors or abort.
export async function subscribe(
  url: string,
  onEvent: (event: SseEvent) => void,
  opts: SubscribeOptions = {},
): Promise<void> {
  const fetchFn = opts.fetchFn ?? ((...args: Parameters<typeof fetch>) => globalThis.fetch(...args));
  const response = await fetchFn(url, {
    headers: { Accept: "text/event-stream", ...opts.headers },
    signal: opts.signal,
  });
  if (!response.ok || !response.body) {
    throw new Error(`stream request failed with status ${response.status}`);
  }
  const reader = response.body.getReader();
  const decoder = new TextDecoder();
  const parser = new SseParser();
  for (;;) {
    const { done, value } = await reader.read();
    if (done) break;
    for (const event of parser.push(decoder.decode(value, { stream: true }))) {
      onEvent(event);
    }
  }
}
