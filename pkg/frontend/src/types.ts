// Wire shapes, mirrored from the HTTP API. Offsets are code-point indices.

export type PersonaId = 'mad_scientist' | 'curious_girl';
export type Affect = 'happy' | 'calm' | 'angry' | 'disappointed';
export type Sentiment = 'positive' | 'neutral' | 'negative';

export interface AnchorView {
  start: number;
  end: number;
  quote: string;
  created_at_version: number;
  status: 'live' | 'orphaned';
}

export interface DocumentView {
  id: string;
  text: string;
  version: number;
}

export interface CommentView {
  id: string;
  persona_id: string;
  anchor: AnchorView;
  text: string;
  sentiment: Sentiment;
  state: 'pending' | 'accepted' | 'rejected';
  created_seq: number;
}

export interface SuggestionView {
  id: string;
  comment_id: string;
  technique_id: string;
  rationale: string;
}

export interface HighlightView {
  id: string;
  suggestion_id: string;
  anchor: AnchorView;
  state: 'visible' | 'dismissed' | 'consumed' | 'orphaned';
}

export interface ProposalView {
  id: string;
  highlight_id: string;
  revised_text: string;
  state: 'offered' | 'adopted' | 'discarded';
}

export interface FlashView {
  affect: Affect;
  expires_at: number;
}

export interface PersonaStateView {
  persona_id: string;
  flash: FlashView | null;
}

export interface SessionView {
  id: string;
  event_seq: number;
  document: DocumentView;
  comments: CommentView[];
  suggestions: SuggestionView[];
  highlights: HighlightView[];
  proposals: ProposalView[];
  persona_states: PersonaStateView[];
}

export interface EditBody {
  at: number;
  deleted_len: number;
  inserted: string;
  base_version: number;
}

export interface DecisionResult {
  comment: CommentView;
  suggestions: SuggestionView[];
}

export interface ServerEvent {
  seq: number;
  timestamp: number;
  actor: string;
  kind: string;
  payload: Record<string, unknown>;
}

// The assistant's catalog is fixed; ids arrive on suggestions, names are
// a presentation concern.
export const TECHNIQUE_NAMES: Record<string, string> = {
  humor: 'Humor',
  analogy_metaphor: 'Analogy and Metaphor',
  emotional_arousal: 'Emotional Arousal',
  suspense_surprise: 'Suspense and Surprise',
};

export const PERSONA_IDS: PersonaId[] = ['mad_scientist', 'curious_girl'];

export const PERSONA_LABELS: Record<PersonaId, string> = {
  mad_scientist: 'Mad Scientist',
  curious_girl: 'Curious Girl',
};

export const NEGATIVE_AFFECT: Record<PersonaId, Affect> = {
  mad_scientist: 'angry',
  curious_girl: 'disappointed',
};

export function affectFor(personaId: PersonaId, sentiment: Sentiment): Affect {
  if (sentiment === 'positive') return 'happy';
  if (sentiment === 'negative') return NEGATIVE_AFFECT[personaId];
  return 'calm';
}
