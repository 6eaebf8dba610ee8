"""Story text, edit splices, and span anchors that survive edits.

All offsets are Unicode code points (plain Python string indices), matching
what a browser reports for selections. Operations are value-semantic: inputs
are never mutated, results are new objects.

Anchors carry the exact text they were created over (``quote``). When an edit
lands outside the span the offsets are shifted arithmetically; when it touches
the span the anchor is re-resolved by searching the edited text for the quote.
A re-search only succeeds if the quote occurs exactly once - an ambiguous
match orphans the anchor rather than guessing, and orphaning is permanent.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

from .errors import OutOfBoundsError, VersionMismatchError


class AnchorStatus(str, Enum):
    LIVE = "live"
    ORPHANED = "orphaned"


@dataclass(frozen=True)
class Document:
    """Plain-text story body. ``version`` increments by one per applied edit."""

    id: str
    text: str
    version: int = 0


@dataclass(frozen=True)
class EditOperation:
    """Splice: delete ``deleted_len`` code points at ``at``, insert ``inserted``."""

    at: int
    deleted_len: int
    inserted: str
    base_version: int

    @property
    def net_shift(self) -> int:
        return len(self.inserted) - self.deleted_len

    @property
    def is_identity(self) -> bool:
        return self.deleted_len == 0 and self.inserted == ""


@dataclass(frozen=True)
class SpanAnchor:
    """Edit-stable reference to ``text[start:end]`` == ``quote``."""

    start: int
    end: int
    quote: str
    created_at_version: int
    status: AnchorStatus = AnchorStatus.LIVE

    @property
    def is_live(self) -> bool:
        return self.status is AnchorStatus.LIVE

    @property
    def is_zero_length(self) -> bool:
        return self.start == self.end


def apply_edit(doc: Document, edit: EditOperation) -> Document:
    """Apply a splice, returning a new document with the version incremented."""
    if edit.base_version != doc.version:
        raise VersionMismatchError(edit.base_version, doc.version)
    if edit.deleted_len < 0 or not 0 <= edit.at <= len(doc.text):
        raise OutOfBoundsError(f"edit offset {edit.at} invalid for length {len(doc.text)}")
    if edit.at + edit.deleted_len > len(doc.text):
        raise OutOfBoundsError(
            f"edit deletes past end: {edit.at}+{edit.deleted_len} > {len(doc.text)}"
        )
    new_text = doc.text[: edit.at] + edit.inserted + doc.text[edit.at + edit.deleted_len :]
    return replace(doc, text=new_text, version=doc.version + 1)


def extract_span(doc: Document, start: int, end: int) -> SpanAnchor:
    """Create a live anchor over ``doc.text[start:end]``.

    Zero-length spans are permitted here; policy layers decide whether an
    empty selection is acceptable for a given action.
    """
    if not 0 <= start <= end <= len(doc.text):
        raise OutOfBoundsError(
            f"span [{start},{end}) out of bounds for length {len(doc.text)}"
        )
    return SpanAnchor(
        start=start,
        end=end,
        quote=doc.text[start:end],
        created_at_version=doc.version,
    )


def _research(anchor: SpanAnchor, text: str) -> SpanAnchor:
    """Re-resolve by quote search: adopt a match only if it is unique."""
    first = text.find(anchor.quote)
    if first == -1 or text.find(anchor.quote, first + 1) != -1:
        return replace(anchor, status=AnchorStatus.ORPHANED)
    return replace(anchor, start=first, end=first + len(anchor.quote))


def transform_anchor(anchor: SpanAnchor, edit: EditOperation, edited_text: str) -> SpanAnchor:
    """Carry an anchor across one edit.

    ``edited_text`` is the document text after the edit; it is needed to
    re-resolve anchors the edit touched. Disjoint edits are pure offset
    arithmetic. An insertion exactly at the span start shifts the span;
    one exactly at the span end leaves it alone.
    """
    if not anchor.is_live:
        return anchor
    if edit.at + edit.deleted_len <= anchor.start:
        shift = edit.net_shift
        return replace(anchor, start=anchor.start + shift, end=anchor.end + shift)
    if edit.at >= anchor.end:
        return anchor
    return _research(anchor, edited_text)


def resolve_anchor(doc: Document, anchor: SpanAnchor) -> SpanAnchor:
    """Return the anchor's current position in ``doc``, re-searching if needed."""
    if not anchor.is_live:
        return anchor
    if (
        0 <= anchor.start <= anchor.end <= len(doc.text)
        and doc.text[anchor.start : anchor.end] == anchor.quote
    ):
        return anchor
    return _research(anchor, doc.text)
