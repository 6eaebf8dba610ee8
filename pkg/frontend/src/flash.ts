import type { Affect } from './types.js';

export const FLASH_MS = 1000;

/**
 * Decides which face each persona shows. Idle is calm; hovering a comment
 * shows its sentiment-matched affect; a decision flash outranks hover and
 * reverts after exactly one second, with a newer decision restarting the
 * second from its own arrival.
 */
export class AvatarDisplay {
  private flashes = new Map<string, { affect: Affect; timer: ReturnType<typeof setTimeout> }>();
  private hovers = new Map<string, Affect>();

  constructor(
    private readonly onChange: (personaId: string) => void,
    private readonly flashMs: number = FLASH_MS,
  ) {}

  flash(personaId: string, affect: Affect): void {
    const previous = this.flashes.get(personaId);
    if (previous) clearTimeout(previous.timer);
    const timer = setTimeout(() => {
      this.flashes.delete(personaId);
      this.onChange(personaId);
    }, this.flashMs);
    this.flashes.set(personaId, { affect, timer });
    this.onChange(personaId);
  }

  setHover(personaId: string, affect: Affect | null): void {
    if (affect === null) this.hovers.delete(personaId);
    else this.hovers.set(personaId, affect);
    this.onChange(personaId);
  }

  displayed(personaId: string): Affect {
    const flash = this.flashes.get(personaId);
    if (flash) return flash.affect;
    return this.hovers.get(personaId) ?? 'calm';
  }

  dispose(): void {
    for (const { timer } of this.flashes.values()) clearTimeout(timer);
    this.flashes.clear();
    this.hovers.clear();
  }
}
