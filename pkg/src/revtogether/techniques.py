"""The writing-technique catalog and suggestions for accepted comments."""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

from .errors import IllegalTransitionError
from .personas import Comment, CommentState

if TYPE_CHECKING:
    from .gateway import Gateway


@dataclass(frozen=True)
class Technique:
    """One entry of the fixed technique catalog."""

    id: str
    name: str
    definition: str
    benefits: tuple[str, ...]


# The catalog is fixed: exactly these four, in this order. Names, definitions
# and benefit lists are part of the product contract; tests pin them verbatim.
CATALOG: tuple[Technique, ...] = (
    Technique(
        id="humor",
        name="Humor",
        definition=(
            "The use of wit, jokes, or light-hearted language to make complex"
            " topics more engaging and enjoyable."
        ),
        benefits=(
            "Capture attention",
            "Simplify understanding",
            "Make the content relatable to readers",
        ),
    ),
    Technique(
        id="analogy_metaphor",
        name="Analogy and Metaphor",
        definition="Compare complex ideas to familiar concepts to enhance understanding.",
        benefits=(
            "Simplify obscure topics by relating them to everyday experiences or imagery",
            "Make the content memorable",
        ),
    ),
    Technique(
        id="emotional_arousal",
        name="Emotional Arousal",
        definition=(
            "The use of evocative language or storytelling to trigger readers'"
            " emotions and create a deeper connection"
        ),
        benefits=(
            "Engage readers",
            "Make the content memorable",
            "Inspire curiosity",
        ),
    ),
    Technique(
        id="suspense_surprise",
        name="Suspense and Surprise",
        definition=(
            "Build anticipation through uncertainty and captivate readers by"
            " delivering unexpected twists or revelations."
        ),
        benefits=(
            "Engage readers",
            "Stimulating curiosity",
            "Make the content memorable",
        ),
    ),
)

TECHNIQUES_BY_ID = {t.id: t for t in CATALOG}
TECHNIQUES_BY_NAME = {t.name: t for t in CATALOG}


def catalog() -> tuple[Technique, ...]:
    """The full, fixed technique catalog, in canonical order."""
    return CATALOG


def lookup_technique(label: object) -> Technique | None:
    """Find a catalog entry by id or by display name (case-insensitive)."""
    if not isinstance(label, str):
        return None
    if label in TECHNIQUES_BY_ID:
        return TECHNIQUES_BY_ID[label]
    for technique in CATALOG:
        if technique.name.lower() == label.lower():
            return technique
    return None


@dataclass(frozen=True)
class TechniqueSuggestion:
    """An assistant recommendation tying one catalog technique to one comment."""

    id: str
    comment_id: str
    technique_id: str
    rationale: str

    @property
    def technique(self) -> Technique:
        return TECHNIQUES_BY_ID[self.technique_id]


def suggest_techniques(
    comment: Comment,
    full_story: str,
    gateway: "Gateway",
    *,
    start_index: int = 1,
) -> list[TechniqueSuggestion]:
    """Ask the assistant which techniques could address an accepted comment.

    Acceptance is the only doorway to the assistant, so any other comment
    state is an illegal transition. Suggestions come back in reply order
    with ids s<start_index>, s<start_index + 1>, and so on.
    """
    if comment.state is not CommentState.ACCEPTED:
        raise IllegalTransitionError(
            f"technique suggestions need an accepted comment,"
            f" {comment.id} is {comment.state.value}"
        )
    reply = gateway.complete(
        "assistant_techniques",
        {
            "comment_text": comment.text,
            "focus_text": comment.anchor.quote,
            "full_story": full_story,
        },
    )
    return [
        TechniqueSuggestion(
            id=f"s{start_index + i}",
            comment_id=comment.id,
            technique_id=entry["technique_id"],
            rationale=entry["rationale"],
        )
        for i, entry in enumerate(reply["techniques"])
    ]
