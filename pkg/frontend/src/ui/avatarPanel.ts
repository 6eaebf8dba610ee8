import { PERSONA_LABELS } from '../types.js';
import type { Affect, PersonaId } from '../types.js';

/** One persona's face. The image key is always (persona, affect). */
export class AvatarPanel {
  readonly element: HTMLDivElement;
  private readonly image: HTMLImageElement;

  constructor(
    doc: Document,
    private readonly personaId: PersonaId,
    private readonly avatarUrl: (personaId: string, affect: string) => string,
  ) {
    this.element = doc.createElement('div');
    this.element.className = 'rt-avatar-panel';
    this.element.dataset.persona = personaId;

    this.image = doc.createElement('img');
    this.image.className = 'rt-avatar';
    this.image.alt = PERSONA_LABELS[personaId];

    const name = doc.createElement('div');
    name.className = 'rt-persona-name';
    name.textContent = PERSONA_LABELS[personaId];

    this.element.append(this.image, name);
    this.update('calm');
  }

  update(affect: Affect): void {
    this.image.src = this.avatarUrl(this.personaId, affect);
    this.image.dataset.affect = affect;
  }
}
