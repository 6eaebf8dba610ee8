import type {
  CommentView,
  DecisionResult,
  DocumentView,
  EditBody,
  HighlightView,
  ProposalView,
  SessionView,
} from './types.js';

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
    public readonly detail: unknown = null,
  ) {
    super(message);
    this.name = 'ApiError';
  }
}

/** Everything the UI is allowed to do to a session, one method per route. */
export interface ApiClient {
  createSession(text: string): Promise<SessionView>;
  getSession(sessionId: string): Promise<SessionView>;
  postEdit(sessionId: string, edit: EditBody): Promise<DocumentView>;
  requestComment(
    sessionId: string,
    personaId: string,
    start: number,
    end: number,
  ): Promise<CommentView>;
  decideComment(
    sessionId: string,
    commentId: string,
    decision: 'accept' | 'reject',
  ): Promise<DecisionResult>;
  selectSuggestion(sessionId: string, suggestionId: string): Promise<{ highlights: HighlightView[] }>;
  requestRevision(sessionId: string, highlightId: string): Promise<ProposalView>;
  adoptProposal(sessionId: string, proposalId: string): Promise<DocumentView>;
  avatarUrl(personaId: string, affect: string): string;
  eventStreamUrl(sessionId: string, fromSeq: number): string;
}

async function unwrap<T>(res: Response): Promise<T> {
  if (res.ok) {
    return (await res.json()) as T;
  }
  let code = 'http_error';
  let message = `${res.status} ${res.statusText}`;
  let detail: unknown = null;
  try {
    const body = (await res.json()) as { error?: { code?: string; message?: string; detail?: unknown } };
    if (body.error) {
      code = body.error.code ?? code;
      message = body.error.message ?? message;
      detail = body.error.detail ?? null;
    }
  } catch {
    // non-JSON error body; keep the status line
  }
  throw new ApiError(res.status, code, message, detail);
}

export class HttpApiClient implements ApiClient {
  constructor(
    private readonly baseUrl: string = '',
    private readonly fetchFn: typeof fetch = fetch.bind(globalThis),
  ) {}

  private post<T>(path: string, body?: unknown): Promise<T> {
    return this.fetchFn(this.baseUrl + path, {
      method: 'POST',
      headers: body === undefined ? {} : { 'content-type': 'application/json' },
      body: body === undefined ? undefined : JSON.stringify(body),
    }).then((res) => unwrap<T>(res));
  }

  createSession(text: string): Promise<SessionView> {
    return this.post('/v1/sessions', { text });
  }

  getSession(sessionId: string): Promise<SessionView> {
    return this.fetchFn(`${this.baseUrl}/v1/sessions/${sessionId}`).then((res) =>
      unwrap<SessionView>(res),
    );
  }

  postEdit(sessionId: string, edit: EditBody): Promise<DocumentView> {
    return this.post(`/v1/sessions/${sessionId}/edits`, edit);
  }

  requestComment(sessionId: string, personaId: string, start: number, end: number) {
    return this.post<CommentView>(`/v1/sessions/${sessionId}/comment-requests`, {
      persona_id: personaId,
      start,
      end,
    });
  }

  decideComment(sessionId: string, commentId: string, decision: 'accept' | 'reject') {
    return this.post<DecisionResult>(
      `/v1/sessions/${sessionId}/comments/${commentId}/decision`,
      { decision },
    );
  }

  selectSuggestion(sessionId: string, suggestionId: string) {
    return this.post<{ highlights: HighlightView[] }>(
      `/v1/sessions/${sessionId}/suggestions/${suggestionId}/select`,
    );
  }

  requestRevision(sessionId: string, highlightId: string): Promise<ProposalView> {
    return this.post(`/v1/sessions/${sessionId}/highlights/${highlightId}/revision`);
  }

  adoptProposal(sessionId: string, proposalId: string): Promise<DocumentView> {
    return this.post(`/v1/sessions/${sessionId}/proposals/${proposalId}/adopt`);
  }

  avatarUrl(personaId: string, affect: string): string {
    return `${this.baseUrl}/avatars/${personaId}/${affect}.png`;
  }

  eventStreamUrl(sessionId: string, fromSeq: number): string {
    return `${this.baseUrl}/v1/sessions/${sessionId}/events?from=${fromSeq}&live=true`;
  }
}
