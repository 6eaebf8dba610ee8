import type {
  AnchorView,
  CommentView,
  HighlightView,
  ProposalView,
  ServerEvent,
  SessionView,
  SuggestionView,
} from './types.js';

// The server counts offsets in code points; JS strings index code units.
// All splicing goes through these helpers so astral characters line up.

export function cpLength(s: string): number {
  let n = 0;
  for (const _ of s) n++;
  return n;
}

export function cpSplice(text: string, at: number, deletedLen: number, inserted: string): string {
  const points = Array.from(text);
  points.splice(at, deletedLen, ...Array.from(inserted));
  return points.join('');
}

export function cpSlice(text: string, start: number, end: number): string {
  return Array.from(text).slice(start, end).join('');
}

function countOccurrences(haystack: string, needle: string): { count: number; firstCu: number } {
  let count = 0;
  let firstCu = -1;
  let idx = haystack.indexOf(needle);
  while (idx >= 0) {
    if (firstCu < 0) firstCu = idx;
    count++;
    idx = haystack.indexOf(needle, idx + 1);
    if (count > 1) break; // two is already ambiguous
  }
  return { count, firstCu };
}

/**
 * Mirror of the server's anchor transform: edits wholly before shift the
 * anchor, edits wholly after leave it, and an overlapping edit forces a
 * whole-text re-match that must be unique or the anchor orphans for good.
 */
export function shiftAnchor(
  anchor: AnchorView,
  at: number,
  deletedLen: number,
  insertedLen: number,
  newText: string,
): AnchorView {
  if (anchor.status === 'orphaned') return anchor;
  const net = insertedLen - deletedLen;
  if (at + deletedLen <= anchor.start) {
    return { ...anchor, start: anchor.start + net, end: anchor.end + net };
  }
  if (at >= anchor.end) return anchor;
  if (anchor.quote === '') return { ...anchor, status: 'orphaned' };
  const { count, firstCu } = countOccurrences(newText, anchor.quote);
  if (count !== 1) return { ...anchor, status: 'orphaned' };
  const start = cpLength(newText.slice(0, firstCu));
  return { ...anchor, start, end: start + cpLength(anchor.quote) };
}

export interface StoreState {
  session: SessionView | null;
  notices: string[];
  pendingOps: Set<string>;
}

export type StoreListener = (state: StoreState, event: ServerEvent | null) => void;

/**
 * The single source of truth for the view. Document text changes only
 * inside applyEvent, in response to confirmed server events; every UI
 * action goes out as an API call and comes back through here.
 */
export class SessionStore {
  private state: StoreState = { session: null, notices: [], pendingOps: new Set() };
  private listeners: StoreListener[] = [];
  private appliedSeq = 0;
  onGap: (() => void) | null = null;

  get session(): SessionView | null {
    return this.state.session;
  }

  get notices(): string[] {
    return this.state.notices;
  }

  get pendingOps(): Set<string> {
    return this.state.pendingOps;
  }

  get lastSeq(): number {
    return this.appliedSeq;
  }

  subscribe(listener: StoreListener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private emit(event: ServerEvent | null): void {
    for (const listener of [...this.listeners]) listener(this.state, event);
  }

  /** Replace the whole mirror from a GET /sessions response. */
  seed(session: SessionView): void {
    this.state.session = structuredClone(session);
    this.appliedSeq = session.event_seq;
    this.emit(null);
  }

  addNotice(message: string): void {
    this.state.notices.push(message);
    this.emit(null);
  }

  markPending(op: string): void {
    this.state.pendingOps.add(op);
    this.emit(null);
  }

  clearPending(op: string): void {
    this.state.pendingOps.delete(op);
    this.emit(null);
  }

  applyEvent(event: ServerEvent): void {
    if (event.seq <= this.appliedSeq) return; // stream replayed history we already hold
    if (event.kind !== 'session_created' && this.state.session === null) return;
    if (this.state.session !== null && event.seq !== this.appliedSeq + 1) {
      this.onGap?.();
      return;
    }
    const p = event.payload as Record<string, any>;
    switch (event.kind) {
      case 'session_created':
        this.state.session = {
          id: String(p.session_id),
          event_seq: event.seq,
          document: { id: String(p.document_id), text: String(p.text), version: 0 },
          comments: [],
          suggestions: [],
          highlights: [],
          proposals: [],
          persona_states: [],
        };
        break;
      case 'edit_applied':
        this.spliceDocument(p.at, p.deleted_len, p.inserted);
        break;
      case 'comment_added':
        this.state.session!.comments.push(p.comment as CommentView);
        break;
      case 'comment_decided': {
        const comment = this.comment(String(p.comment_id));
        if (comment) comment.state = p.decision === 'accepted' ? 'accepted' : 'rejected';
        break;
      }
      case 'persona_flash':
        break; // display timing is handled by the avatar panel
      case 'suggestions_generated': {
        for (const s of p.suggestions as Array<Record<string, unknown>>) {
          this.state.session!.suggestions.push({
            id: String(s.id),
            comment_id: String(p.comment_id),
            technique_id: String(s.technique_id),
            rationale: String(s.rationale),
          } satisfies SuggestionView);
        }
        break;
      }
      case 'highlights_generated': {
        for (const id of (p.dismissed ?? []) as string[]) {
          const h = this.highlight(id);
          if (h && h.state === 'visible') h.state = 'dismissed';
        }
        for (const h of p.highlights as Array<Record<string, any>>) {
          this.state.session!.highlights.push({
            id: String(h.id),
            suggestion_id: String(p.suggestion_id),
            anchor: {
              start: Number(h.start),
              end: Number(h.end),
              quote: String(h.quote),
              created_at_version: Number(h.created_at_version),
              status: 'live',
            },
            state: 'visible',
          } satisfies HighlightView);
        }
        break;
      }
      case 'revision_offered':
        this.state.session!.proposals.push({
          id: String(p.proposal_id),
          highlight_id: String(p.highlight_id),
          revised_text: String(p.revised_text),
          state: 'offered',
        } satisfies ProposalView);
        break;
      case 'revision_adopted': {
        const proposal = this.proposal(String(p.proposal_id));
        if (proposal) proposal.state = 'adopted';
        const highlight = this.highlight(String(p.highlight_id));
        if (highlight) highlight.state = 'consumed';
        this.spliceDocument(p.at, p.deleted_len, p.inserted);
        break;
      }
      case 'proposal_discarded': {
        const proposal = this.proposal(String(p.proposal_id));
        if (proposal && proposal.state === 'offered') proposal.state = 'discarded';
        break;
      }
      case 'anchor_orphaned': {
        if (p.kind === 'comment') {
          const comment = this.comment(String(p.id));
          if (comment) comment.anchor = { ...comment.anchor, status: 'orphaned' };
        } else if (p.kind === 'highlight') {
          const highlight = this.highlight(String(p.id));
          if (highlight) {
            highlight.anchor = { ...highlight.anchor, status: 'orphaned' };
            if (highlight.state === 'visible') highlight.state = 'orphaned';
          }
        }
        break;
      }
      case 'error':
        if (typeof p.message === 'string') this.state.notices.push(p.message);
        break;
      default:
        break; // unknown kinds are informational; seq still advances
    }
    this.appliedSeq = event.seq;
    if (this.state.session) this.state.session.event_seq = event.seq;
    this.emit(event);
  }

  private spliceDocument(at: number, deletedLen: number, inserted: string): void {
    const session = this.state.session!;
    const newText = cpSplice(session.document.text, at, deletedLen, inserted);
    session.document = {
      ...session.document,
      text: newText,
      version: session.document.version + 1,
    };
    const insertedLen = cpLength(inserted);
    for (const comment of session.comments) {
      comment.anchor = shiftAnchor(comment.anchor, at, deletedLen, insertedLen, newText);
    }
    for (const highlight of session.highlights) {
      highlight.anchor = shiftAnchor(highlight.anchor, at, deletedLen, insertedLen, newText);
    }
  }

  private comment(id: string): CommentView | undefined {
    return this.state.session?.comments.find((c) => c.id === id);
  }

  private highlight(id: string): HighlightView | undefined {
    return this.state.session?.highlights.find((h) => h.id === id);
  }

  private proposal(id: string): ProposalView | undefined {
    return this.state.session?.proposals.find((pr) => pr.id === id);
  }
}
