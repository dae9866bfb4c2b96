import type { ConnectionStatus, StreamEvent } from "./types";

export interface SseOptions {
  onEvent: (event: StreamEvent) => void;
  onStatus?: (status: ConnectionStatus) => void;
  fetchFn?: typeof fetch;
  initialBackoffMs?: number;
  maxBackoffMs?: number;
  maxRetries?: number; // undefined = retry forever
}

/** Parse one SSE frame (the lines between blank lines) into a StreamEvent. */
export function parseFrame(lines: string[]): StreamEvent | null {
  let id = -1;
  let type = "message";
  const data: string[] = [];
  for (const line of lines) {
    if (line.startsWith(":")) continue; // comment / keepalive
    const sep = line.indexOf(":");
    if (sep < 0) continue;
    const field = line.slice(0, sep);
    const value = line.slice(sep + 1).replace(/^ /, "");
    if (field === "id") id = Number(value);
    else if (field === "event") type = value;
    else if (field === "data") data.push(value);
  }
  if (data.length === 0) return null;
  return { type, seq: id, payload: JSON.parse(data.join("\n")) };
}

const sleep = (ms: number) => new Promise((r) => setTimeout(r, ms));

/**
 * Streaming SSE subscription over fetch with exponential-backoff reconnect.
 * Network errors never throw out of start(); they become status updates.
 */
export class SseClient {
  private stopped = false;

  constructor(private url: string, private opts: SseOptions) {}

  close(): void {
    this.stopped = true;
  }

  async start(): Promise<void> {
    const fetchFn = this.opts.fetchFn ?? fetch;
    let backoff = this.opts.initialBackoffMs ?? 500;
    const maxBackoff = this.opts.maxBackoffMs ?? 15000;
    let retries = 0;
    this.opts.onStatus?.("Connecting");
    while (!this.stopped) {
      try {
        const resp = await fetchFn(this.url, { headers: { Accept: "text/event-stream" } });
        if (!resp.ok || !resp.body) throw new Error(`stream returned ${resp.status}`);
        this.opts.onStatus?.("Connected");
        backoff = this.opts.initialBackoffMs ?? 500;
        retries = 0;
        await this.consume(resp.body);
        if (this.stopped) break;
        // Finite stream (follow=false) ends cleanly.
        this.opts.onStatus?.("Closed");
        return;
      } catch {
        if (this.stopped) break;
        if (this.opts.maxRetries !== undefined && ++retries > this.opts.maxRetries) {
          this.opts.onStatus?.("Closed");
          return;
        }
        this.opts.onStatus?.("Reconnecting");
        await sleep(backoff);
        backoff = Math.min(backoff * 2, maxBackoff);
      }
    }
    this.opts.onStatus?.("Closed");
  }

  private async consume(body: ReadableStream<Uint8Array>): Promise<void> {
    const reader = body.getReader();
    const decoder = new TextDecoder();
    let buffer = "";
    for (;;) {
      const { done, value } = await reader.read();
      if (done || this.stopped) return;
      buffer += decoder.decode(value, { stream: true });
      let idx;
      while ((idx = buffer.indexOf("\n\n")) >= 0) {
        const frame = buffer.slice(0, idx).split("\n");
        buffer = buffer.slice(idx + 2);
        const event = parseFrame(frame);
        if (event) this.opts.onEvent(event);
      }
    }
  }
}
