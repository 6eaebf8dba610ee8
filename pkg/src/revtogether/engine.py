"""Event-sourced session workflow: comments, suggestions, highlights, revisions.

Every state change is an Event; ``apply_event`` is the only code that mutates
a Session, and it is strict, so replaying a recorded log either reproduces the
exact state or raises an integrity error at the first diverging entry.
Operations validate, call the gateway if they need it, then emit events.
Provider replies travel inside event payloads, which is why replay never
calls a provider.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional

from .clock import Clock
from .document import (
    AnchorStatus,
    Document,
    EditOperation,
    SpanAnchor,
    apply_edit,
    extract_span,
    resolve_anchor,
    transform_anchor,
)
from .errors import (
    GatewayError,
    IllegalTransitionError,
    IntegrityError,
    NotFoundError,
    StaleProposalError,
    error_code,
)
from .gateway import Gateway
from .personas import (
    FLASH_SECONDS,
    Affect,
    Comment,
    CommentState,
    Persona,
    PersonaState,
    Sentiment,
    generate_comment,
    load_personas,
)
from .techniques import TechniqueSuggestion, suggest_techniques

ACTOR_WRITER = "writer"
ACTOR_ASSISTANT = "assistant"
ACTOR_SYSTEM = "system"


class HighlightState(str, Enum):
    VISIBLE = "visible"
    DISMISSED = "dismissed"
    CONSUMED = "consumed"


class ProposalState(str, Enum):
    OFFERED = "offered"
    ADOPTED = "adopted"
    DISCARDED = "discarded"


@dataclass
class Highlight:
    """A passage the assistant marked as a place to apply a technique."""

    id: str
    suggestion_id: str
    anchor: SpanAnchor
    state: HighlightState = HighlightState.VISIBLE


@dataclass
class RevisionProposal:
    """Assistant-drafted replacement text for one highlight."""

    id: str
    highlight_id: str
    revised_text: str
    state: ProposalState = ProposalState.OFFERED


@dataclass(frozen=True)
class Event:
    """One entry of the append-only session log."""

    seq: int
    timestamp: float
    actor: str
    kind: str
    payload: dict


def event_to_dict(event: Event) -> dict:
    return {
        "seq": event.seq,
        "timestamp": event.timestamp,
        "actor": event.actor,
        "kind": event.kind,
        "payload": event.payload,
    }


def event_from_dict(data: dict) -> Event:
    return Event(
        seq=data["seq"],
        timestamp=data["timestamp"],
        actor=data["actor"],
        kind=data["kind"],
        payload=data["payload"],
    )


@dataclass
class Session:
    """Full mutable state of one revision session."""

    id: str
    document: Document
    comments: dict[str, Comment] = field(default_factory=dict)
    suggestions: dict[str, TechniqueSuggestion] = field(default_factory=dict)
    highlights: dict[str, Highlight] = field(default_factory=dict)
    proposals: dict[str, RevisionProposal] = field(default_factory=dict)
    persona_states: dict[str, PersonaState] = field(default_factory=dict)
    event_seq: int = 0


# --- serialization ---


def _anchor_to_dict(anchor: SpanAnchor) -> dict:
    return {
        "start": anchor.start,
        "end": anchor.end,
        "quote": anchor.quote,
        "created_at_version": anchor.created_at_version,
        "status": anchor.status.value,
    }


def _anchor_from_dict(data: dict) -> SpanAnchor:
    return SpanAnchor(
        start=data["start"],
        end=data["end"],
        quote=data["quote"],
        created_at_version=data["created_at_version"],
        status=AnchorStatus(data["status"]),
    )


def document_to_dict(doc: Document) -> dict:
    return {"id": doc.id, "text": doc.text, "version": doc.version}


def comment_to_dict(c: Comment) -> dict:
    return {
        "id": c.id,
        "persona_id": c.persona_id,
        "anchor": _anchor_to_dict(c.anchor),
        "text": c.text,
        "sentiment": c.sentiment.value,
        "state": c.state.value,
        "created_seq": c.created_seq,
    }


def suggestion_to_dict(s: TechniqueSuggestion) -> dict:
    return {
        "id": s.id,
        "comment_id": s.comment_id,
        "technique_id": s.technique_id,
        "rationale": s.rationale,
    }


def highlight_to_dict(h: Highlight) -> dict:
    return {
        "id": h.id,
        "suggestion_id": h.suggestion_id,
        "anchor": _anchor_to_dict(h.anchor),
        "state": h.state.value,
    }


def proposal_to_dict(p: RevisionProposal) -> dict:
    return {
        "id": p.id,
        "highlight_id": p.highlight_id,
        "revised_text": p.revised_text,
        "state": p.state.value,
    }


def persona_state_to_dict(ps: PersonaState) -> dict:
    return {
        "persona_id": ps.persona_id,
        "flash": (
            {"affect": ps.flash.affect.value, "expires_at": ps.flash.expires_at}
            if ps.flash is not None
            else None
        ),
    }


def session_to_dict(session: Session) -> dict:
    """JSON-ready snapshot of a session; lists preserve creation order."""
    return {
        "id": session.id,
        "event_seq": session.event_seq,
        "document": document_to_dict(session.document),
        "comments": [comment_to_dict(c) for c in session.comments.values()],
        "suggestions": [suggestion_to_dict(s) for s in session.suggestions.values()],
        "highlights": [highlight_to_dict(h) for h in session.highlights.values()],
        "proposals": [proposal_to_dict(p) for p in session.proposals.values()],
        "persona_states": [
            persona_state_to_dict(ps) for ps in session.persona_states.values()
        ],
    }


def session_from_dict(data: dict) -> Session:
    from .personas import Flash

    session = Session(
        id=data["id"],
        document=Document(
            id=data["document"]["id"],
            text=data["document"]["text"],
            version=data["document"]["version"],
        ),
        event_seq=data["event_seq"],
    )
    for c in data["comments"]:
        session.comments[c["id"]] = Comment(
            id=c["id"],
            persona_id=c["persona_id"],
            anchor=_anchor_from_dict(c["anchor"]),
            text=c["text"],
            sentiment=Sentiment(c["sentiment"]),
            state=CommentState(c["state"]),
            created_seq=c["created_seq"],
        )
    for s in data["suggestions"]:
        session.suggestions[s["id"]] = TechniqueSuggestion(
            id=s["id"],
            comment_id=s["comment_id"],
            technique_id=s["technique_id"],
            rationale=s["rationale"],
        )
    for h in data["highlights"]:
        session.highlights[h["id"]] = Highlight(
            id=h["id"],
            suggestion_id=h["suggestion_id"],
            anchor=_anchor_from_dict(h["anchor"]),
            state=HighlightState(h["state"]),
        )
    for p in data["proposals"]:
        session.proposals[p["id"]] = RevisionProposal(
            id=p["id"],
            highlight_id=p["highlight_id"],
            revised_text=p["revised_text"],
            state=ProposalState(p["state"]),
        )
    for ps in data["persona_states"]:
        flash = None
        if ps.get("flash") is not None:
            flash = Flash(
                affect=Affect(ps["flash"]["affect"]),
                expires_at=ps["flash"]["expires_at"],
            )
        session.persona_states[ps["persona_id"]] = PersonaState(
            persona_id=ps["persona_id"], flash=flash
        )
    return session


# --- event application (the only state mutations) ---


def _edit_from_payload(payload: dict) -> EditOperation:
    return EditOperation(
        at=payload["at"],
        deleted_len=payload["deleted_len"],
        inserted=payload["inserted"],
        base_version=payload["base_version"],
    )


def _splice_and_transform(session: Session, edit: EditOperation) -> None:
    """Apply an edit, carry every anchor across it, drop newly dead proposals."""
    new_doc = apply_edit(session.document, edit)
    for comment in session.comments.values():
        comment.anchor = transform_anchor(comment.anchor, edit, new_doc.text)
    for highlight in session.highlights.values():
        highlight.anchor = transform_anchor(highlight.anchor, edit, new_doc.text)
    session.document = new_doc
    # An offered proposal dies with its highlight's anchor; adopted ones are
    # history and dismissed highlights already lost theirs.
    for proposal in session.proposals.values():
        if proposal.state is ProposalState.OFFERED:
            parent = session.highlights[proposal.highlight_id]
            if parent.anchor.status is AnchorStatus.ORPHANED:
                proposal.state = ProposalState.DISCARDED


def _apply_session_created(session, event):
    if session is not None:
        raise IntegrityError("seq", "session_created on an existing session")
    payload = event.payload
    created = Session(
        id=payload["session_id"],
        document=Document(id=payload["document_id"], text=payload["text"], version=0),
    )
    from .personas import PERSONA_IDS

    for persona_id in PERSONA_IDS:
        created.persona_states[persona_id] = PersonaState(persona_id=persona_id)
    return created


def _apply_edit_applied(session, event):
    _splice_and_transform(session, _edit_from_payload(event.payload))
    return session


def _apply_anchor_orphaned(session, event):
    # Informational: flags an orphaning that _splice_and_transform already
    # performed. Applying it only verifies the claim.
    kind = event.payload["kind"]
    item_id = event.payload["id"]
    pool = session.comments if kind == "comment" else session.highlights
    entity = pool.get(item_id)
    if entity is None:
        raise IntegrityError("entity", f"anchor_orphaned names unknown {kind} {item_id}")
    if entity.anchor.status is not AnchorStatus.ORPHANED:
        raise IntegrityError("anchor", f"{kind} {item_id} is not orphaned")
    return session


def _apply_comment_added(session, event):
    data = event.payload["comment"]
    if data["id"] in session.comments:
        raise IntegrityError("entity", f"duplicate comment id {data['id']}")
    session.comments[data["id"]] = Comment(
        id=data["id"],
        persona_id=data["persona_id"],
        anchor=_anchor_from_dict(data["anchor"]),
        text=data["text"],
        sentiment=Sentiment(data["sentiment"]),
        state=CommentState.PENDING,
        created_seq=event.seq,
    )
    return session


def _apply_comment_decided(session, event):
    comment = session.comments.get(event.payload["comment_id"])
    if comment is None:
        raise IntegrityError("entity", "decision on unknown comment")
    if comment.state is not CommentState.PENDING:
        raise IntegrityError("transition", f"comment {comment.id} already decided")
    decision = event.payload["decision"]
    if decision not in ("accepted", "rejected"):
        raise IntegrityError("payload", f"unknown decision {decision!r}")
    comment.state = CommentState(decision)
    return session


def _apply_persona_flash(session, event):
    persona_id = event.payload["persona_id"]
    state = session.persona_states.get(persona_id)
    if state is None:
        raise IntegrityError("entity", f"flash for unknown persona {persona_id}")
    from .personas import Flash

    session.persona_states[persona_id] = replace(
        state,
        flash=Flash(
            affect=Affect(event.payload["affect"]),
            expires_at=event.payload["expires_at"],
        ),
    )
    return session


def _apply_suggestions_generated(session, event):
    comment = session.comments.get(event.payload["comment_id"])
    if comment is None:
        raise IntegrityError("entity", "suggestions for unknown comment")
    if comment.state is not CommentState.ACCEPTED:
        raise IntegrityError("transition", f"suggestions for undecided comment {comment.id}")
    for entry in event.payload["suggestions"]:
        if entry["id"] in session.suggestions:
            raise IntegrityError("entity", f"duplicate suggestion id {entry['id']}")
        session.suggestions[entry["id"]] = TechniqueSuggestion(
            id=entry["id"],
            comment_id=comment.id,
            technique_id=entry["technique_id"],
            rationale=entry["rationale"],
        )
    return session


def _apply_highlights_generated(session, event):
    suggestion_id = event.payload["suggestion_id"]
    if suggestion_id not in session.suggestions:
        raise IntegrityError("entity", f"highlights for unknown suggestion {suggestion_id}")
    for highlight_id in event.payload["dismissed"]:
        highlight = session.highlights.get(highlight_id)
        if highlight is None or highlight.state is not HighlightState.VISIBLE:
            raise IntegrityError("transition", f"cannot dismiss highlight {highlight_id}")
        highlight.state = HighlightState.DISMISSED
    text = session.document.text
    for entry in event.payload["highlights"]:
        if entry["id"] in session.highlights:
            raise IntegrityError("entity", f"duplicate highlight id {entry['id']}")
        if text[entry["start"] : entry["end"]] != entry["quote"]:
            raise IntegrityError(
                "anchor", f"highlight {entry['id']} quote does not match the document"
            )
        session.highlights[entry["id"]] = Highlight(
            id=entry["id"],
            suggestion_id=suggestion_id,
            anchor=SpanAnchor(
                start=entry["start"],
                end=entry["end"],
                quote=entry["quote"],
                created_at_version=entry["created_at_version"],
            ),
        )
    return session


def _apply_proposal_discarded(session, event):
    proposal = session.proposals.get(event.payload["proposal_id"])
    if proposal is None:
        raise IntegrityError("entity", "discard of unknown proposal")
    if proposal.state is ProposalState.ADOPTED:
        raise IntegrityError("transition", f"proposal {proposal.id} is adopted, not discardable")
    proposal.state = ProposalState.DISCARDED
    return session


def _apply_revision_offered(session, event):
    payload = event.payload
    highlight = session.highlights.get(payload["highlight_id"])
    if highlight is None:
        raise IntegrityError("entity", "offer against unknown highlight")
    if highlight.state is not HighlightState.VISIBLE or not highlight.anchor.is_live:
        raise IntegrityError("transition", f"offer against dead highlight {highlight.id}")
    if payload["proposal_id"] in session.proposals:
        raise IntegrityError("entity", f"duplicate proposal id {payload['proposal_id']}")
    for other in session.proposals.values():
        if other.highlight_id == highlight.id and other.state is ProposalState.OFFERED:
            raise IntegrityError("transition", f"highlight {highlight.id} already has an offer")
    session.proposals[payload["proposal_id"]] = RevisionProposal(
        id=payload["proposal_id"],
        highlight_id=payload["highlight_id"],
        revised_text=payload["revised_text"],
    )
    return session


def _apply_revision_adopted(session, event):
    payload = event.payload
    proposal = session.proposals.get(payload["proposal_id"])
    if proposal is None or proposal.state is not ProposalState.OFFERED:
        raise IntegrityError("transition", "adoption of a proposal that is not offered")
    highlight = session.highlights.get(proposal.highlight_id)
    if highlight is None or not highlight.anchor.is_live:
        raise IntegrityError("anchor", "adoption against a dead highlight")
    edit = _edit_from_payload(payload)
    spliced = session.document.text[edit.at : edit.at + edit.deleted_len]
    if spliced != highlight.anchor.quote:
        raise IntegrityError("splice", "adoption span does not match the highlight quote")
    proposal.state = ProposalState.ADOPTED
    highlight.state = HighlightState.CONSUMED
    _splice_and_transform(session, edit)
    return session


def _apply_error(session, event):
    # Failed gateway calls leave a trace but change nothing.
    return session


_APPLIERS = {
    "session_created": _apply_session_created,
    "edit_applied": _apply_edit_applied,
    "anchor_orphaned": _apply_anchor_orphaned,
    "comment_added": _apply_comment_added,
    "comment_decided": _apply_comment_decided,
    "persona_flash": _apply_persona_flash,
    "suggestions_generated": _apply_suggestions_generated,
    "highlights_generated": _apply_highlights_generated,
    "proposal_discarded": _apply_proposal_discarded,
    "revision_offered": _apply_revision_offered,
    "revision_adopted": _apply_revision_adopted,
    "error": _apply_error,
}


def apply_event(session: Optional[Session], event: Event) -> Session:
    """Advance a session by one event; the sole state-transition function.

    Strict by design: a gap in seq numbers, an unknown kind, or an event
    inconsistent with the current state raises rather than guessing.
    """
    expected = 1 if session is None else session.event_seq + 1
    if event.seq != expected:
        raise IntegrityError("seq", f"event seq {event.seq}, expected {expected}")
    applier = _APPLIERS.get(event.kind)
    if applier is None:
        raise IntegrityError("kind", f"unknown event kind {event.kind!r}")
    if session is None and event.kind != "session_created":
        raise IntegrityError("seq", f"first event must be session_created, got {event.kind!r}")
    result = applier(session, event)
    result.event_seq = event.seq
    return result


def replay_events(events: list[Event], base: Optional[Session] = None) -> Session:
    """Fold a recorded log into a session, starting from ``base`` or nothing."""
    session = base
    for event in events:
        session = apply_event(session, event)
    if session is None:
        raise IntegrityError("empty", "no events to replay")
    return session


def verify_causality(session: Session) -> list[str]:
    """Check the agency-gating chain; returns violations (empty means sound)."""
    problems = []
    for suggestion in session.suggestions.values():
        comment = session.comments.get(suggestion.comment_id)
        if comment is None:
            problems.append(f"suggestion {suggestion.id} has no comment")
        elif comment.state is not CommentState.ACCEPTED:
            problems.append(
                f"suggestion {suggestion.id} rests on {comment.state.value} comment {comment.id}"
            )
    for highlight in session.highlights.values():
        if highlight.suggestion_id not in session.suggestions:
            problems.append(f"highlight {highlight.id} has no suggestion")
    adopted_by_highlight: dict[str, int] = {}
    for proposal in session.proposals.values():
        if proposal.highlight_id not in session.highlights:
            problems.append(f"proposal {proposal.id} has no highlight")
        if proposal.state is ProposalState.ADOPTED:
            adopted_by_highlight[proposal.highlight_id] = (
                adopted_by_highlight.get(proposal.highlight_id, 0) + 1
            )
    for highlight_id, count in adopted_by_highlight.items():
        if count > 1:
            problems.append(f"highlight {highlight_id} has {count} adopted proposals")
    for highlight in session.highlights.values():
        adopted = adopted_by_highlight.get(highlight.id, 0) > 0
        if (highlight.state is HighlightState.CONSUMED) != adopted:
            problems.append(
                f"highlight {highlight.id} consumed={highlight.state.value} adopted={adopted}"
            )
    return problems


# --- the engine: validate, call the gateway, emit ---


class SessionEngine:
    """Serialized workflow operations over one session.

    Methods either complete fully (events emitted, state advanced) or raise
    with the session unchanged; a gateway failure additionally leaves an
    error event in the log.
    """

    def __init__(
        self,
        session: Session,
        gateway: Gateway,
        clock: Clock,
        *,
        personas: Optional[dict[str, Persona]] = None,
        events: Optional[list[Event]] = None,
    ):
        self.session = session
        self.gateway = gateway
        self.clock = clock
        self.personas = personas if personas is not None else load_personas()
        self.events: list[Event] = list(events or [])
        self.lock = threading.RLock()

    @classmethod
    def create(
        cls,
        session_id: str,
        initial_text: str,
        gateway: Gateway,
        clock: Clock,
        *,
        document_id: Optional[str] = None,
        personas: Optional[dict[str, Persona]] = None,
    ) -> "SessionEngine":
        event = Event(
            seq=1,
            timestamp=clock.now(),
            actor=ACTOR_SYSTEM,
            kind="session_created",
            payload={
                "session_id": session_id,
                "document_id": document_id or f"{session_id}.doc",
                "text": initial_text,
            },
        )
        session = apply_event(None, event)
        return cls(session, gateway, clock, personas=personas, events=[event])

    @classmethod
    def from_events(
        cls,
        events: list[Event],
        gateway: Gateway,
        clock: Clock,
        *,
        personas: Optional[dict[str, Persona]] = None,
    ) -> "SessionEngine":
        session = replay_events(events)
        return cls(session, gateway, clock, personas=personas, events=list(events))

    def _emit(self, actor: str, kind: str, payload: dict) -> Event:
        event = Event(
            seq=self.session.event_seq + 1,
            timestamp=self.clock.now(),
            actor=actor,
            kind=kind,
            payload=payload,
        )
        self.session = apply_event(self.session, event)
        self.events.append(event)
        return event

    def events_since(self, from_seq: int) -> list[Event]:
        """Events with seq > from_seq, in order."""
        with self.lock:
            return self.events[max(from_seq, 0) :]

    def _log_gateway_error(self, op: str, exc: GatewayError) -> None:
        self._emit(
            ACTOR_SYSTEM,
            "error",
            {"op": op, "code": error_code(exc), "message": str(exc)},
        )

    def _flag_anchor_changes(self, pre_status, pre_offered) -> None:
        """Emit informational events for orphanings and cascade discards."""
        for (kind, item_id), status in pre_status.items():
            pool = self.session.comments if kind == "comment" else self.session.highlights
            entity = pool[item_id]
            if status is AnchorStatus.LIVE and entity.anchor.status is AnchorStatus.ORPHANED:
                self._emit(ACTOR_SYSTEM, "anchor_orphaned", {"kind": kind, "id": item_id})
        for proposal_id in pre_offered:
            if self.session.proposals[proposal_id].state is ProposalState.DISCARDED:
                self._emit(
                    ACTOR_SYSTEM,
                    "proposal_discarded",
                    {"proposal_id": proposal_id, "reason": "anchor_orphaned"},
                )

    def _anchor_snapshot(self):
        pre_status = {}
        for comment in self.session.comments.values():
            pre_status[("comment", comment.id)] = comment.anchor.status
        for highlight in self.session.highlights.values():
            pre_status[("highlight", highlight.id)] = highlight.anchor.status
        pre_offered = [
            p.id for p in self.session.proposals.values() if p.state is ProposalState.OFFERED
        ]
        return pre_status, pre_offered

    # --- operations ---

    def writer_edit(self, edit: EditOperation) -> Document:
        with self.lock:
            apply_edit(self.session.document, edit)  # validate only; apply happens via the event
            pre_status, pre_offered = self._anchor_snapshot()
            self._emit(
                ACTOR_WRITER,
                "edit_applied",
                {
                    "at": edit.at,
                    "deleted_len": edit.deleted_len,
                    "inserted": edit.inserted,
                    "base_version": edit.base_version,
                },
            )
            self._flag_anchor_changes(pre_status, pre_offered)
            return self.session.document

    def request_comment(self, persona_id: str, start: int, end: int) -> Comment:
        with self.lock:
            persona = self.personas.get(persona_id)
            if persona is None:
                raise NotFoundError("persona", persona_id)
            anchor = extract_span(self.session.document, start, end)
            comment_id = f"c{len(self.session.comments) + 1}"
            try:
                comment = generate_comment(
                    persona,
                    anchor,
                    self.session.document.text,
                    self.gateway,
                    comment_id=comment_id,
                )
            except GatewayError as exc:
                self._log_gateway_error("request_comment", exc)
                raise
            self._emit(
                persona_id,
                "comment_added",
                {
                    "comment": {
                        "id": comment.id,
                        "persona_id": persona_id,
                        "anchor": _anchor_to_dict(anchor),
                        "text": comment.text,
                        "sentiment": comment.sentiment.value,
                    }
                },
            )
            return self.session.comments[comment_id]

    def _decide(self, comment_id: str, decision: str) -> Comment:
        comment = self.session.comments.get(comment_id)
        if comment is None:
            raise NotFoundError("comment", comment_id)
        if comment.state is not CommentState.PENDING:
            raise IllegalTransitionError(
                f"comment {comment_id} already {comment.state.value}"
            )
        return comment

    def accept_comment(self, comment_id: str) -> list[TechniqueSuggestion]:
        """Accept a pending comment; this is what wakes the assistant.

        The gateway is consulted before anything is committed, so a failed
        suggestion call leaves the comment still pending and retryable.
        """
        with self.lock:
            comment = self._decide(comment_id, "accepted")
            accepted_view = replace(comment, state=CommentState.ACCEPTED)
            try:
                suggestions = suggest_techniques(
                    accepted_view,
                    self.session.document.text,
                    self.gateway,
                    start_index=len(self.session.suggestions) + 1,
                )
            except GatewayError as exc:
                self._log_gateway_error("accept_comment", exc)
                raise
            persona = self.personas[comment.persona_id]
            self._emit(
                ACTOR_WRITER,
                "comment_decided",
                {"comment_id": comment_id, "decision": "accepted"},
            )
            self._emit(
                persona.id,
                "persona_flash",
                {
                    "persona_id": persona.id,
                    "affect": Affect.HAPPY.value,
                    "expires_at": self.clock.now() + FLASH_SECONDS,
                },
            )
            self._emit(
                ACTOR_ASSISTANT,
                "suggestions_generated",
                {
                    "comment_id": comment_id,
                    "suggestions": [
                        {
                            "id": s.id,
                            "technique_id": s.technique_id,
                            "rationale": s.rationale,
                        }
                        for s in suggestions
                    ],
                },
            )
            return [self.session.suggestions[s.id] for s in suggestions]

    def reject_comment(self, comment_id: str) -> Comment:
        with self.lock:
            comment = self._decide(comment_id, "rejected")
            persona = self.personas[comment.persona_id]
            self._emit(
                ACTOR_WRITER,
                "comment_decided",
                {"comment_id": comment_id, "decision": "rejected"},
            )
            self._emit(
                persona.id,
                "persona_flash",
                {
                    "persona_id": persona.id,
                    "affect": persona.negative_affect.value,
                    "expires_at": self.clock.now() + FLASH_SECONDS,
                },
            )
            return self.session.comments[comment_id]

    def select_technique(self, suggestion_id: str) -> list[Highlight]:
        with self.lock:
            suggestion = self.session.suggestions.get(suggestion_id)
            if suggestion is None:
                raise NotFoundError("suggestion", suggestion_id)
            comment = self.session.comments[suggestion.comment_id]
            doc = self.session.document
            try:
                reply = self.gateway.complete(
                    "assistant_highlights",
                    {
                        "technique_name": suggestion.technique.name,
                        "comment_text": comment.text,
                        "focus_text": comment.anchor.quote,
                        "full_story": doc.text,
                    },
                )
            except GatewayError as exc:
                self._log_gateway_error("select_technique", exc)
                raise
            descriptors = []
            for i, passage in enumerate(reply["passages"]):
                # Validation guarantees the passage occurs; anchor at its
                # first occurrence.
                at = doc.text.find(passage)
                descriptors.append(
                    {
                        "id": f"h{len(self.session.highlights) + 1 + i}",
                        "start": at,
                        "end": at + len(passage),
                        "quote": passage,
                        "created_at_version": doc.version,
                    }
                )
            dismissed = [
                h.id
                for h in self.session.highlights.values()
                if h.suggestion_id == suggestion_id and h.state is HighlightState.VISIBLE
            ]
            doomed_offers = [
                p.id
                for p in self.session.proposals.values()
                if p.highlight_id in dismissed and p.state is ProposalState.OFFERED
            ]
            self._emit(
                ACTOR_ASSISTANT,
                "highlights_generated",
                {
                    "suggestion_id": suggestion_id,
                    "dismissed": dismissed,
                    "highlights": descriptors,
                },
            )
            for proposal_id in doomed_offers:
                self._emit(
                    ACTOR_SYSTEM,
                    "proposal_discarded",
                    {"proposal_id": proposal_id, "reason": "highlight_dismissed"},
                )
            return [self.session.highlights[d["id"]] for d in descriptors]

    def request_revision(self, highlight_id: str) -> RevisionProposal:
        with self.lock:
            highlight = self.session.highlights.get(highlight_id)
            if highlight is None:
                raise NotFoundError("highlight", highlight_id)
            if highlight.state is not HighlightState.VISIBLE:
                raise IllegalTransitionError(
                    f"highlight {highlight_id} is {highlight.state.value}"
                )
            if not highlight.anchor.is_live:
                raise IllegalTransitionError(f"highlight {highlight_id} is orphaned")
            suggestion = self.session.suggestions[highlight.suggestion_id]
            comment = self.session.comments[suggestion.comment_id]
            try:
                reply = self.gateway.complete(
                    "assistant_revision",
                    {
                        "technique_name": suggestion.technique.name,
                        "comment_text": comment.text,
                        "highlight_text": highlight.anchor.quote,
                        "full_story": self.session.document.text,
                    },
                )
            except GatewayError as exc:
                self._log_gateway_error("request_revision", exc)
                raise
            replaced = [
                p.id
                for p in self.session.proposals.values()
                if p.highlight_id == highlight_id and p.state is ProposalState.OFFERED
            ]
            for proposal_id in replaced:
                self._emit(
                    ACTOR_SYSTEM,
                    "proposal_discarded",
                    {"proposal_id": proposal_id, "reason": "replaced"},
                )
            proposal_id = f"p{len(self.session.proposals) + 1}"
            self._emit(
                ACTOR_ASSISTANT,
                "revision_offered",
                {
                    "proposal_id": proposal_id,
                    "highlight_id": highlight_id,
                    "revised_text": reply["revised_text"],
                },
            )
            return self.session.proposals[proposal_id]

    def adopt_revision(self, proposal_id: str) -> Document:
        with self.lock:
            proposal = self.session.proposals.get(proposal_id)
            if proposal is None:
                raise NotFoundError("proposal", proposal_id)
            if proposal.state is ProposalState.ADOPTED:
                raise IllegalTransitionError(f"proposal {proposal_id} already adopted")
            if proposal.state is ProposalState.DISCARDED:
                raise StaleProposalError(f"proposal {proposal_id} was discarded")
            highlight = self.session.highlights[proposal.highlight_id]
            resolved = resolve_anchor(self.session.document, highlight.anchor)
            if not resolved.is_live:
                raise StaleProposalError(
                    f"highlight {highlight.id} no longer matches the text"
                )
            pre_status, pre_offered = self._anchor_snapshot()
            self._emit(
                ACTOR_WRITER,
                "revision_adopted",
                {
                    "proposal_id": proposal_id,
                    "highlight_id": highlight.id,
                    "at": resolved.start,
                    "deleted_len": resolved.end - resolved.start,
                    "inserted": proposal.revised_text,
                    "base_version": self.session.document.version,
                },
            )
            self._flag_anchor_changes(pre_status, pre_offered)
            return self.session.document

    def comments_for_display(self, persona_id: str) -> list[Comment]:
        """One persona's comments, oldest first (the stack renders newest at
        the bottom)."""
        with self.lock:
            mine = [
                c for c in self.session.comments.values() if c.persona_id == persona_id
            ]
            return sorted(mine, key=lambda c: c.created_seq)
