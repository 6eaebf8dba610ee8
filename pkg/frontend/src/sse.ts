import type { ServerEvent } from './types.js';

export interface SseFrame {
  id: string;
  event: string;
  data: string;
}

/**
 * Incremental parser for a text/event-stream byte feed. Frames are
 * separated by a blank line; fields are "name: value" pairs , with
 * multi-line data joined by newlines.
 */
export class SseParser {
  private buffer = '';

  push(chunk: string): SseFrame[] {
    this.buffer += chunk;
    const frames: SseFrame[] = [];
    let split: number;
    while ((split = this.buffer.indexOf('\n\n')) >= 0) {
      const raw = this.buffer.slice(0, split);
      this.buffer = this.buffer.slice(split + 2);
      const frame: SseFrame = { id: '', event: 'message', data: '' };
      const dataLines: string[] = [];
      for (const line of raw.split('\n')) {
        const colon = line.indexOf(':');
        if (colon <= 0) continue; // comment line or malformed
        const name = line.slice(0, colon);
        const value = line.slice(colon + 1).replace(/^ /, '');
        if (name === 'id') frame.id = value;
        else if (name === 'event') frame.event = value;
        else if (name === 'data') dataLines.push(value);
      }
      frame.data = dataLines.join('\n');
      frames.push(frame);
    }
    return frames;
  }
}

export function frameToServerEvent(frame: SseFrame): ServerEvent | null {
  if (!frame.data) return null;
  try {
    const parsed = JSON.parse(frame.data) as ServerEvent;
    if (typeof parsed.seq !== 'number' || typeof parsed.kind !== 'string') return null;
    return parsed;
  } catch {
    return null;
  }
}

export interface StreamHandle {
  stop(): void;
}

/**
 * Reads the session event stream over fetch, reconnecting from the last
 * seen seq. Events are delivered in order to the callback.
 */
export function openEventStream(
  urlFor: (fromSeq: number) => string,
  fromSeq: number,
  onEvent: (event: ServerEvent) => void,
  onError: (err: unknown) => void = () => {},
  fetchFn: typeof fetch = fetch.bind(globalThis),
): StreamHandle {
  let stopped = false;
  let cursor = fromSeq;

  async function run(): Promise<void> {
    while (!stopped) {
      try {
        const res = await fetchFn(urlFor(cursor), {
          headers: { accept: 'text/event-stream' },
        });
        if (!res.ok || !res.body) throw new Error(`stream failed: ${res.status}`);
        const reader = res.body.getReader();
        const decoder = new TextDecoder();
        const parser = new SseParser();
        for (;;) {
          const { done, value } = await reader.read();
          if (stopped) {
            await reader.cancel().catch(() => {});
            return;
          }
          if (done) break;
          for (const frame of parser.push(decoder.decode(value, { stream: true }))) {
            const event = frameToServerEvent(frame);
            if (event && event.seq > cursor) {
              cursor = event.seq;
              onEvent(event);
            }
          }
        }
      } catch (err) {
        if (stopped) return;
        onError(err);
        await new Promise((r) => setTimeout(r, 1000));
      }
    }
  }

  void run();
  return {
    stop() {
      stopped = true;
    },
  };
}
