import { cpLength } from '../store.js';
import { PERSONA_IDS, PERSONA_LABELS } from '../types.js';
import type { PersonaId, SessionView } from '../types.js';

export interface DocumentViewHooks {
  onRequestComment(personaId: PersonaId, start: number, end: number): void;
  onHighlightClick(highlightId: string): void;
  onProposalDoubleClick(proposalId: string): void;
  onInput(): void;
}

function cpToCu(text: string, cpIndex: number): number {
  let cu = 0;
  let count = 0;
  for (const ch of text) {
    if (count === cpIndex) return cu;
    cu += ch.length;
    count++;
  }
  return text.length;
}

const MIRROR_STYLE_PROPS = [
  'font-family',
  'font-size',
  'font-weight',
  'line-height',
  'letter-spacing',
  'padding',
  'border-width',
  'box-sizing',
  'white-space',
  'word-wrap',
  'width',
] as const;

/**
 * The editing box: a plain textarea carrying the writer's draft, a render
 * layer painting highlights and inline proposals over the confirmed text,
 * and a floating persona menu that appears beneath nonempty selections.
 */
export class DocumentView {
  readonly shell: HTMLDivElement;
  readonly textarea: HTMLTextAreaElement;
  readonly renderLayer: HTMLDivElement;
  readonly menu: HTMLDivElement;

  constructor(
    doc: Document,
    private readonly hooks: DocumentViewHooks,
  ) {
    this.shell = doc.createElement('div');
    this.shell.className = 'rt-editor-shell';

    this.renderLayer = doc.createElement('div');
    this.renderLayer.className = 'rt-doc-render';
    this.renderLayer.setAttribute('aria-hidden', 'true');

    this.textarea = doc.createElement('textarea');
    this.textarea.className = 'rt-editor-input';
    this.textarea.spellcheck = false;

    this.menu = doc.createElement('div');
    this.menu.className = 'rt-selection-menu rt-below rt-hidden';
    for (const personaId of PERSONA_IDS) {
      const button = doc.createElement('button');
      button.type = 'button';
      button.className = 'rt-menu-persona';
      button.dataset.persona = personaId;
      button.textContent = `Ask ${PERSONA_LABELS[personaId]}`;
      button.addEventListener('click', () => this.requestComment(personaId));
      this.menu.appendChild(button);
    }

    this.shell.append(this.renderLayer, this.textarea, this.menu);

    this.textarea.addEventListener('input', () => {
      this.hideMenu();
      this.hooks.onInput();
    });
    for (const type of ['select', 'mouseup', 'keyup'] as const) {
      this.textarea.addEventListener(type, () => this.evaluateSelection());
    }
  }

  private selectionCp(): { start: number; end: number } {
    const value = this.textarea.value;
    const startCu = this.textarea.selectionStart ?? 0;
    const endCu = this.textarea.selectionEnd ?? 0;
    return {
      start: cpLength(value.slice(0, startCu)),
      end: cpLength(value.slice(0, endCu)),
    };
  }

  evaluateSelection(): void {
    const { start, end } = this.selectionCp();
    if (end > start) this.showMenuBeneathSelection();
    else this.hideMenu();
  }

  private showMenuBeneathSelection(): void {
    const rect = this.caretRect(this.textarea.selectionEnd ?? 0);
    this.menu.style.top = `${rect.bottom}px`;
    this.menu.style.left = `${rect.left}px`;
    this.menu.classList.remove('rt-hidden');
  }

  hideMenu(): void {
    this.menu.classList.add('rt-hidden');
  }

  get menuVisible(): boolean {
    return !this.menu.classList.contains('rt-hidden');
  }

  /** Approximate caret geometry via an offscreen mirror of the textarea. */
  private caretRect(cuIndex: number): { bottom: number; left: number } {
    const doc = this.textarea.ownerDocument;
    const win = doc.defaultView;
    const mirror = doc.createElement('div');
    mirror.style.position = 'absolute';
    mirror.style.visibility = 'hidden';
    mirror.style.whiteSpace = 'pre-wrap';
    if (win) {
      const computed = win.getComputedStyle(this.textarea);
      for (const prop of MIRROR_STYLE_PROPS) {
        mirror.style.setProperty(prop, computed.getPropertyValue(prop));
      }
    }
    mirror.textContent = this.textarea.value.slice(0, cuIndex);
    const marker = doc.createElement('span');
    marker.textContent = '​';
    mirror.appendChild(marker);
    this.shell.appendChild(mirror);
    const bottom = this.textarea.offsetTop + marker.offsetTop + marker.offsetHeight;
    const left = this.textarea.offsetLeft + marker.offsetLeft;
    mirror.remove();
    return { bottom, left };
  }

  private requestComment(personaId: PersonaId): void {
    const { start, end } = this.selectionCp();
    if (end <= start) return;
    this.hideMenu();
    this.hooks.onRequestComment(personaId, start, end);
  }

  /** True while the draft has diverged from the confirmed document. */
  draftDiffers(confirmed: string): boolean {
    return this.textarea.value !== confirmed;
  }

  syncDraft(confirmed: string): void {
    if (this.textarea.value !== confirmed) this.textarea.value = confirmed;
  }

  render(session: SessionView): void {
    const doc = this.shell.ownerDocument;
    const text = session.document.text;
    this.renderLayer.textContent = '';

    interface Deco {
      startCu: number;
      endCu: number;
      highlightId: string;
      consumed: boolean;
    }
    const decos: Deco[] = [];
    for (const h of session.highlights) {
      if (h.anchor.status !== 'live') continue;
      if (h.state !== 'visible' && h.state !== 'consumed') continue;
      decos.push({
        startCu: cpToCu(text, h.anchor.start),
        endCu: cpToCu(text, h.anchor.end),
        highlightId: h.id,
        consumed: h.state === 'consumed',
      });
    }
    decos.sort((a, b) => a.startCu - b.startCu || a.endCu - b.endCu);

    const offeredByHighlight = new Map<string, { id: string; text: string }>();
    for (const p of session.proposals) {
      if (p.state === 'offered') {
        offeredByHighlight.set(p.highlight_id, { id: p.id, text: p.revised_text });
      }
    }

    let cursor = 0;
    for (const deco of decos) {
      if (deco.startCu < cursor) continue; // overlapping decoration, keep the first
      if (deco.startCu > cursor) {
        this.renderLayer.appendChild(doc.createTextNode(text.slice(cursor, deco.startCu)));
      }
      const span = doc.createElement('span');
      span.className = deco.consumed ? 'rt-hl rt-hl-consumed' : 'rt-hl';
      span.dataset.highlightId = deco.highlightId;
      // Green background per the review-marking convention of this tool.
      span.style.backgroundColor = deco.consumed ? '#d8ecdb' : '#a9dfbf';
      span.textContent = text.slice(deco.startCu, deco.endCu);
      if (!deco.consumed) {
        span.addEventListener('click', () => this.hooks.onHighlightClick(deco.highlightId));
      }
      this.renderLayer.appendChild(span);
      cursor = deco.endCu;

      const offer = offeredByHighlight.get(deco.highlightId);
      if (offer) {
        const proposal = doc.createElement('span');
        proposal.className = 'rt-proposal';
        proposal.dataset.proposalId = offer.id;
        proposal.style.color = '#c0392b';
        proposal.style.fontWeight = '700';
        proposal.textContent = ` ${offer.text}`;
        proposal.addEventListener('dblclick', () =>
          this.hooks.onProposalDoubleClick(offer.id),
        );
        this.renderLayer.appendChild(proposal);
      }
    }
    if (cursor < text.length) {
      this.renderLayer.appendChild(doc.createTextNode(text.slice(cursor)));
    }
  }
}
