import type { EditBody } from './types.js';

export const EDIT_FLUSH_MS = 500;

/**
 * Single-region diff between the confirmed document and the editor's
 * current value, in code points: longest common prefix, then longest
 * common suffix of what remains.
 */
export function diffToEdit(oldText: string, newText: string, baseVersion: number): EditBody | null {
  if (oldText === newText) return null;
  const a = Array.from(oldText);
  const b = Array.from(newText);
  let prefix = 0;
  while (prefix < a.length && prefix < b.length && a[prefix] === b[prefix]) prefix++;
  let suffix = 0;
  while (
    suffix < a.length - prefix &&
    suffix < b.length - prefix &&
    a[a.length - 1 - suffix] === b[b.length - 1 - suffix]
  ) {
    suffix++;
  }
  return {
    at: prefix,
    deleted_len: a.length - prefix - suffix,
    inserted: b.slice(prefix, b.length - suffix).join(''),
    base_version: baseVersion,
  };
}

/**
 * Collects keystrokes and flushes them as one edit operation after a
 * typing pause, or immediately before any structural action.
 */
export class EditBuffer {
  private timer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    private readonly send: (edit: EditBody) => void,
    private readonly current: () => { confirmed: string; draft: string; version: number },
    private readonly flushMs: number = EDIT_FLUSH_MS,
  ) {}

  noteInput(): void {
    if (this.timer) clearTimeout(this.timer);
    this.timer = setTimeout(() => this.flush(), this.flushMs);
  }

  flush(): void {
    if (this.timer) {
      clearTimeout(this.timer);
      this.timer = null;
    }
    const { confirmed, draft, version } = this.current();
    const edit = diffToEdit(confirmed, draft, version);
    if (edit) this.send(edit);
  }

  get pending(): boolean {
    return this.timer !== null;
  }

  dispose(): void {
    if (this.timer) clearTimeout(this.timer);
    this.timer = null;
  }
}
