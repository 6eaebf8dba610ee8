"""An interactive revision workbench for science stories.

Two reader personas comment on passages the writer selects; accepting a
comment unlocks a writing assistant that suggests techniques, highlights
places to apply them, and offers inline revisions the writer can adopt.
"""

from .document import Document, EditOperation, SpanAnchor, apply_edit, extract_span
from .engine import Session, SessionEngine, replay_events
from .errors import RevTogetherError
from .gateway import Gateway, MockProvider, ProviderConfig, RemoteProvider
from .personas import Affect, Comment, CommentState, Persona, Sentiment, load_personas
from .techniques import CATALOG, Technique, TechniqueSuggestion

__version__ = "0.1.0"

__all__ = [
    "Affect",
    "CATALOG",
    "Comment",
    "CommentState",
    "Document",
    "EditOperation",
    "Gateway",
    "MockProvider",
    "Persona",
    "ProviderConfig",
    "RemoteProvider",
    "RevTogetherError",
    "Sentiment",
    "Session",
    "SessionEngine",
    "SpanAnchor",
    "Technique",
    "TechniqueSuggestion",
    "apply_edit",
    "extract_span",
    "load_personas",
    "replay_events",
    "__version__",
]
