import { affectFor } from '../types.js';
import type { Affect, CommentView, PersonaId, SessionView } from '../types.js';

export interface CommentStackHooks {
  onDecide(commentId: string, decision: 'accept' | 'reject'): void;
  onHoverComment(personaId: PersonaId, affect: Affect | null): void;
}

/**
 * One persona's column of comments, stacked oldest at the top and newest
 * at the bottom, sitting directly above that persona's avatar. Decided
 * comments stay in the stack but render muted.
 */
export class CommentStack {
  readonly element: HTMLDivElement;

  constructor(
    doc: Document,
    private readonly personaId: PersonaId,
    private readonly hooks: CommentStackHooks,
  ) {
    this.element = doc.createElement('div');
    this.element.className = 'rt-comment-stack';
    this.element.dataset.persona = personaId;
  }

  render(session: SessionView): void {
    const doc = this.element.ownerDocument;
    this.element.textContent = '';
    const comments = session.comments
      .filter((c) => c.persona_id === this.personaId)
      .sort((a, b) => a.created_seq - b.created_seq);
    for (const comment of comments) {
      this.element.appendChild(this.card(doc, comment));
    }
  }

  private card(doc: Document, comment: CommentView): HTMLDivElement {
    const card = doc.createElement('div');
    card.className = `rt-comment rt-comment-${comment.state}`;
    card.dataset.commentId = comment.id;
    card.dataset.sentiment = comment.sentiment;
    if (comment.state !== 'pending') card.classList.add('rt-muted');

    const body = doc.createElement('div');
    body.className = 'rt-comment-text';
    body.textContent = comment.text;
    card.appendChild(body);

    if (comment.state === 'pending') {
      const actions = doc.createElement('div');
      actions.className = 'rt-comment-actions';
      const accept = doc.createElement('button');
      accept.type = 'button';
      accept.className = 'rt-accept';
      accept.textContent = 'Good point!';
      accept.addEventListener('click', () => this.hooks.onDecide(comment.id, 'accept'));
      const reject = doc.createElement('button');
      reject.type = 'button';
      reject.className = 'rt-reject';
      reject.textContent = 'ignore';
      reject.addEventListener('click', () => this.hooks.onDecide(comment.id, 'reject'));
      actions.append(accept, reject);
      card.appendChild(actions);
    }

    card.addEventListener('mouseenter', () => {
      card.classList.add('rt-hovered');
      this.hooks.onHoverComment(this.personaId, affectFor(this.personaId, comment.sentiment));
    });
    card.addEventListener('mouseleave', () => {
      card.classList.remove('rt-hovered');
      this.hooks.onHoverComment(this.personaId, null);
    });
    return card;
  }
}
