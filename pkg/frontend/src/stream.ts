import type { FetchLike } from "./api.js";
import type { ViolationRecord } from "./types.js";

export type StreamState = "connecting" | "live" | "stale" | "ended";

export type StreamHandlers = {
  onViolation: (record: ViolationRecord) => void;
  onState?: (state: StreamState) => void;
};

export type StreamHandle = { stop: () => void };

export type SseFrame = { event: string; data: string };

// Incremental server-sent-events parser; frames may arrive split across
// arbitrary chunk boundaries.
export class SseParser {
  private buffer = "";
  private event = "";
  private data: string[] = [];

  feed(chunk: string): SseFrame[] {
    this.buffer += chunk;
    const frames: SseFrame[] = [];
    let nl: number;
    while ((nl = this.buffer.indexOf("\n")) >= 0) {
      const line = this.buffer.slice(0, nl).replace(/\r$/, "");
      this.buffer = this.buffer.slice(nl + 1);
      if (line === "") {
        if (this.data.length > 0) {
          frames.push({ event: this.event || "message", data: this.data.join("\n") });
        }
        this.event = "";
        this.data = [];
        continue;
      }
      if (line.startsWith(":")) continue;
      const sep = line.indexOf(":");
      const field = sep < 0 ? line : line.slice(0, sep);
      const value = sep < 0 ? "" : line.slice(sep + 1).replace(/^ /, "");
      if (field === "event") this.event = value;
      else if (field === "data") this.data.push(value);
    }
    return frames;
  }
}

export type StreamOptions = {
  afterIndex?: number;
  retryMs?: number;
  fetchImpl?: FetchLike;
};

// Consumes the violation stream over a plain streaming fetch so the same
// code runs in the browser and under node. Reconnects resume after the last
// index seen; a clean server-side close reports "ended" and the caller
// decides whether the run actually finished.
export const streamViolations = (
  base: string,
  handlers: StreamHandlers,
  opts: StreamOptions = {},
): StreamHandle => {
  const fetchImpl = opts.fetchImpl ?? ((url: string, init?: RequestInit) => fetch(url, init));
  const retryMs = opts.retryMs ?? 1000;
  let cursor = opts.afterIndex ?? -1;
  let stopped = false;
  let controller: AbortController | null = null;

  const setState = (state: StreamState) => {
    if (!stopped) handlers.onState?.(state);
  };

  const run = async () => {
    while (!stopped) {
      setState("connecting");
      controller = new AbortController();
      try {
        const url = `${base.replace(/\/+$/, "")}/stream?after_index=${cursor}`;
        const resp = await fetchImpl(url, { signal: controller.signal });
        if (!resp.ok || resp.body === null) throw new Error(`stream http ${resp.status}`);
        setState("live");
        const reader = resp.body.getReader();
        const decoder = new TextDecoder();
        const parser = new SseParser();
        for (;;) {
          const { done, value } = await reader.read();
          if (done) break;
          for (const frame of parser.feed(decoder.decode(value, { stream: true }))) {
            if (frame.event !== "violation") continue;
            let record: ViolationRecord;
            try {
              record = JSON.parse(frame.data) as ViolationRecord;
            } catch {
              continue;
            }
            cursor = record.index;
            if (!stopped) handlers.onViolation(record);
          }
        }
        setState("ended");
        return;
      } catch {
        if (stopped) return;
        setState("stale");
        await new Promise((resolve) => setTimeout(resolve, retryMs));
      }
    }
  };

  void run();
  return {
    stop: () => {
      stopped = true;
      controller?.abort();
    },
  };
};
