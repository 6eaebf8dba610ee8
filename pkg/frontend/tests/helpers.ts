import type { ApiClient } from '../src/api.js';
import type {
  CommentView,
  DecisionResult,
  DocumentView,
  EditBody,
  HighlightView,
  ProposalView,
  ServerEvent,
  SessionView,
} from '../src/types.js';

export function seedSession(text: string, id = 's1'): SessionView {
  return {
    id,
    event_seq: 1,
    document: { id: `${id}.doc`, text, version: 0 },
    comments: [],
    suggestions: [],
    highlights: [],
    proposals: [],
    persona_states: [
      { persona_id: 'mad_scientist', flash: null },
      { persona_id: 'curious_girl', flash: null },
    ],
  };
}

export function evt(seq: number, kind: string, payload: Record<string, unknown>): ServerEvent {
  return { seq, timestamp: seq, actor: 'system', kind, payload };
}

export function commentPayload(
  id: string,
  personaId: string,
  start: number,
  end: number,
  quote: string,
  sentiment: 'positive' | 'neutral' | 'negative',
  createdSeq: number,
  text = `A remark about "${quote}"`,
): Record<string, unknown> {
  return {
    comment: {
      id,
      persona_id: personaId,
      anchor: { start, end, quote, created_at_version: 0, status: 'live' },
      text,
      sentiment,
      state: 'pending',
      created_seq: createdSeq,
    } satisfies CommentView,
  };
}

interface Call {
  method: string;
  args: unknown[];
}

/** Scriptable stand-in for the HTTP API: records calls, returns stubs. */
export class FakeApi implements ApiClient {
  calls: Call[] = [];
  failures = new Map<string, Error>();
  session: SessionView;

  constructor(session: SessionView) {
    this.session = session;
  }

  callsTo(method: string): Call[] {
    return this.calls.filter((c) => c.method === method);
  }

  private run<T>(method: string, args: unknown[], result: T): Promise<T> {
    this.calls.push({ method, args });
    const failure = this.failures.get(method);
    if (failure) return Promise.reject(failure);
    return Promise.resolve(result);
  }

  createSession(text: string): Promise<SessionView> {
    return this.run('createSession', [text], this.session);
  }

  getSession(sessionId: string): Promise<SessionView> {
    return this.run('getSession', [sessionId], structuredClone(this.session));
  }

  postEdit(sessionId: string, edit: EditBody): Promise<DocumentView> {
    return this.run('postEdit', [sessionId, edit], {
      ...this.session.document,
      version: edit.base_version + 1,
    });
  }

  requestComment(
    sessionId: string,
    personaId: string,
    start: number,
    end: number,
  ): Promise<CommentView> {
    return this.run('requestComment', [sessionId, personaId, start, end], {
      id: 'c-stub',
      persona_id: personaId,
      anchor: { start, end, quote: '', created_at_version: 0, status: 'live' },
      text: 'stub',
      sentiment: 'neutral',
      state: 'pending',
      created_seq: 0,
    });
  }

  decideComment(
    sessionId: string,
    commentId: string,
    decision: 'accept' | 'reject',
  ): Promise<DecisionResult> {
    return this.run('decideComment', [sessionId, commentId, decision], {
      comment: {
        id: commentId,
        persona_id: 'mad_scientist',
        anchor: { start: 0, end: 0, quote: '', created_at_version: 0, status: 'live' },
        text: 'stub',
        sentiment: 'neutral',
        state: decision === 'accept' ? 'accepted' : 'rejected',
        created_seq: 0,
      },
      suggestions: [],
    });
  }

  selectSuggestion(sessionId: string, suggestionId: string): Promise<{ highlights: HighlightView[] }> {
    return this.run('selectSuggestion', [sessionId, suggestionId], { highlights: [] });
  }

  requestRevision(sessionId: string, highlightId: string): Promise<ProposalView> {
    return this.run('requestRevision', [sessionId, highlightId], {
      id: 'p-stub',
      highlight_id: highlightId,
      revised_text: '',
      state: 'offered',
    });
  }

  adoptProposal(sessionId: string, proposalId: string): Promise<DocumentView> {
    return this.run('adoptProposal', [sessionId, proposalId], this.session.document);
  }

  avatarUrl(personaId: string, affect: string): string {
    return `/avatars/${personaId}/${affect}.png`;
  }

  eventStreamUrl(sessionId: string, fromSeq: number): string {
    return `/v1/sessions/${sessionId}/events?from=${fromSeq}&live=true`;
  }
}

export function flushMicrotasks(): Promise<void> {
  return Promise.resolve().then(() => Promise.resolve()).then(() => {});
}
