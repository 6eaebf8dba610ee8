import { TECHNIQUE_NAMES } from '../types.js';
import type { SessionView } from '../types.js';

export interface TechniqueTagsHooks {
  onSelect(suggestionId: string): void;
}

/**
 * The row of technique tags below the editing box. Tags exist only for
 * suggestions whose comment the writer accepted; clicking one asks the
 * assistant to highlight where that technique applies.
 */
export class TechniqueTags {
  readonly element: HTMLDivElement;

  constructor(
    doc: Document,
    private readonly hooks: TechniqueTagsHooks,
  ) {
    this.element = doc.createElement('div');
    this.element.className = 'rt-tag-row';
  }

  render(session: SessionView): void {
    const doc = this.element.ownerDocument;
    this.element.textContent = '';
    const accepted = new Set(
      session.comments.filter((c) => c.state === 'accepted').map((c) => c.id),
    );
    for (const suggestion of session.suggestions) {
      if (!accepted.has(suggestion.comment_id)) continue;
      const tag = doc.createElement('button');
      tag.type = 'button';
      tag.className = 'rt-tag';
      tag.dataset.suggestionId = suggestion.id;
      tag.textContent = TECHNIQUE_NAMES[suggestion.technique_id] ?? suggestion.technique_id;
      tag.title = suggestion.rationale;
      tag.addEventListener('click', () => this.hooks.onSelect(suggestion.id));
      this.element.appendChild(tag);
    }
  }
}
