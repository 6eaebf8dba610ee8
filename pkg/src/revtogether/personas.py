"""Reader personas: the fixed cast, their comments, and avatar affect rules."""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import TYPE_CHECKING, Optional

from .assets import asset_root, parse_front_matter
from .document import SpanAnchor
from .errors import ConfigError, InvalidSelectionError

if TYPE_CHECKING:
    from .gateway import Gateway


class Sentiment(str, Enum):
    POSITIVE = "positive"
    NEUTRAL = "neutral"
    NEGATIVE = "negative"


class Affect(str, Enum):
    HAPPY = "happy"
    CALM = "calm"
    ANGRY = "angry"
    DISAPPOINTED = "disappointed"


class CommentState(str, Enum):
    PENDING = "pending"
    ACCEPTED = "accepted"
    REJECTED = "rejected"


# The cast is fixed: exactly these two, one expert reader and one lay reader.
PERSONA_IDS = ("mad_scientist", "curious_girl")

# How long a decision flash holds the avatar, in seconds.
FLASH_SECONDS = 1.0


@dataclass(frozen=True)
class Persona:
    """One member of the commentator cast, loaded from its packaged card."""

    id: str
    display_name: str
    negative_affect: Affect
    card: str

    def affect_for(self, sentiment: Sentiment) -> Affect:
        """Map a comment sentiment to this persona's avatar affect.

        Positive and neutral look the same on every persona; only the
        negative reaction is persona-specific.
        """
        if sentiment is Sentiment.POSITIVE:
            return Affect.HAPPY
        if sentiment is Sentiment.NEUTRAL:
            return Affect.CALM
        return self.negative_affect

    def avatar_path(self, affect: Affect) -> str:
        return f"avatars/{self.id}/{affect.value}.png"


def load_personas() -> dict[str, Persona]:
    """Read the packaged persona cards, keyed by persona id."""
    personas: dict[str, Persona] = {}
    root = asset_root().joinpath("personas")
    for entry in sorted(root.iterdir(), key=lambda e: e.name):
        if not entry.name.endswith(".txt"):
            continue
        meta, body = parse_front_matter(entry.read_text(encoding="utf-8"))
        for key in ("id", "display_name", "negative_affect"):
            if key not in meta:
                raise ConfigError(f"persona card {entry.name}: missing {key!r}")
        try:
            negative = Affect(meta["negative_affect"])
        except ValueError:
            raise ConfigError(
                f"persona card {meta['id']}: unknown affect {meta['negative_affect']!r}"
            ) from None
        if negative in (Affect.HAPPY, Affect.CALM):
            raise ConfigError(
                f"persona card {meta['id']}: negative_affect cannot be {negative.value}"
            )
        personas[meta["id"]] = Persona(
            id=meta["id"],
            display_name=meta["display_name"],
            negative_affect=negative,
            card=body.strip(),
        )
    if tuple(sorted(personas)) != tuple(sorted(PERSONA_IDS)):
        raise ConfigError(
            f"persona cast must be exactly {sorted(PERSONA_IDS)}, found {sorted(personas)}"
        )
    return personas


@dataclass
class Comment:
    """One persona comment tied to a span of the story."""

    id: str
    persona_id: str
    anchor: SpanAnchor
    text: str
    sentiment: Sentiment
    state: CommentState = CommentState.PENDING
    created_seq: int = 0


@dataclass(frozen=True)
class Flash:
    """A short-lived affect override triggered by a writer decision."""

    affect: Affect
    expires_at: float


@dataclass(frozen=True)
class PersonaState:
    """What a persona's avatar shows, derived from hover and recent decisions."""

    persona_id: str
    hover_affect: Optional[Affect] = None
    flash: Optional[Flash] = None

    def displayed_affect(self, now: float) -> Affect:
        # A decision flash outranks hover until it expires; at the exact
        # expiry instant the flash is already over.
        if self.flash is not None and now < self.flash.expires_at:
            return self.flash.affect
        if self.hover_affect is not None:
            return self.hover_affect
        return Affect.CALM


def on_hover(state: PersonaState, affect: Affect) -> PersonaState:
    return replace(state, hover_affect=affect)


def on_hover_end(state: PersonaState) -> PersonaState:
    return replace(state, hover_affect=None)


def on_decision(state: PersonaState, affect: Affect, now: float) -> PersonaState:
    return replace(state, flash=Flash(affect=affect, expires_at=now + FLASH_SECONDS))


def generate_comment(
    persona: Persona,
    anchor: SpanAnchor,
    full_story: str,
    gateway: "Gateway",
    *,
    comment_id: str,
    created_seq: int = 0,
) -> Comment:
    """Ask one persona to react to the anchored passage.

    Returns a pending comment; accepting or rejecting it is the writer's
    move, not ours.
    """
    if not anchor.is_live:
        raise InvalidSelectionError("cannot comment on an orphaned selection")
    if anchor.is_zero_length or not anchor.quote:
        raise InvalidSelectionError("cannot comment on an empty selection")
    reply = gateway.complete(
        "commentator_comment",
        {
            "persona_card": persona.card,
            "full_story": full_story,
            "focus_text": anchor.quote,
        },
    )
    return Comment(
        id=comment_id,
        persona_id=persona.id,
        anchor=anchor,
        text=reply["comment_text"],
        sentiment=Sentiment(reply["sentiment"]),
        created_seq=created_seq,
    )
