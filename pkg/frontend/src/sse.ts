/** Incremental server-sent-events parser over a fetch ReadableStream.
 *
 * EventSource cannot share the abort/retry plumbing we want, and the test
 * runner has no DOM, so the wire format is parsed by hand. Only the subset
 * the service emits is honored: `event:`, `data:`, `:` comments, and the
 * blank-line dispatch rule. Multiple data lines join with newlines per the
 * SSE spec, though the service always sends one.
 */

export interface SseFrame {
  event: string;
  data: string;
}

export class SseParser {
  private tail = "";
  private eventType = "";
  private dataLines: string[] = [];

  /** Feed one decoded chunk; returns every frame completed by it. */
  feed(chunk: string): SseFrame[] {
    const frames: SseFrame[] = [];
    const text = this.tail + chunk;
    const lines = text.split("\n");
    this.tail = lines.pop() ?? ""; // last piece may be a partial line

    for (let raw of lines) {
      if (raw.endsWith("\r")) raw = raw.slice(0, -1);

      if (raw === "") {
        if (this.dataLines.length > 0) {
          frames.push({
            event: this.eventType || "message",
            data: this.dataLines.join("\n"),
          });
        }
        this.eventType = "";
        this.dataLines = [];
        continue;
      }
      if (raw.startsWith(":")) continue; // comment / keep-alive

      const colon = raw.indexOf(":");
      const field = colon === -1 ? raw : raw.slice(0, colon);
      let value = colon === -1 ? "" : raw.slice(colon + 1);
      if (value.startsWith(" ")) value = value.slice(1);

      if (field === "event") this.eventType = value;
      else if (field === "data") this.dataLines.push(value);
      // id/retry are not used by the service; ignore unknown fields
    }
    return frames;
  }
}

export interface StreamOptions {
  signal?: AbortSignal;
  fetchFn?: typeof fetch;
}

/** Yield parsed SSE frames from `url` until the stream ends or aborts. */
export async function* streamFrames(
  url: string,
  opts: StreamOptions = {},
): AsyncGenerator<SseFrame, void, void> {
  const doFetch = opts.fetchFn ?? ((input: RequestInfo | URL, init?: RequestInit) => fetch(input, init));
  const res = await doFetch(url, {
    signal: opts.signal,
    headers: { accept: "text/event-stream" },
  });
  if (!res.ok || res.body === null) {
    throw new Error(`stream request failed: HTTP ${res.status}`);
  }

  const reader = res.body.getReader();
  const decoder = new TextDecoder();
  const parser = new SseParser();
  try {
    for (;;) {
      const { done, value } = await reader.read();
      if (done) return;
      for (const frame of parser.feed(decoder.decode(value, { stream: true }))) {
        yield frame;
      }
    }
  } finally {
    reader.releaseLock();
  }
}
