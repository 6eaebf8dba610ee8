"""Session engine: operations, event log, replay, and causality rules."""

import pytest

from revtogether.clock import SimClock
from revtogether.document import AnchorStatus, EditOperation
from revtogether.engine import (
    Event,
    HighlightState,
    ProposalState,
    SessionEngine,
    apply_event,
    event_from_dict,
    event_to_dict,
    replay_events,
    session_to_dict,
    verify_causality,
)
from revtogether.errors import (
    GatewayError,
    IllegalTransitionError,
    IntegrityError,
    InvalidSelectionError,
    NotFoundError,
    OutOfBoundsError,
    ProviderUnreachableError,
    StaleProposalError,
    VersionMismatchError,
)
from revtogether.gateway import Gateway, MockProvider
from revtogether.personas import CommentState

STORY = "The reef glows at night. Crabs march in lines. Nobody knows why the reef shines."
CRABS = "Crabs march in lines."
CRABS_AT = STORY.index(CRABS)


class FailingGateway:
    """Stands in for a gateway whose provider is down."""

    def complete(self, template_id, bindings):
        raise ProviderUnreachableError("injected outage")


@pytest.fixture()
def engine():
    return SessionEngine.create("s1", STORY, Gateway(MockProvider()), SimClock(0.0))


def edit(engine, at, deleted_len, inserted):
    return engine.writer_edit(
        EditOperation(
            at=at,
            deleted_len=deleted_len,
            inserted=inserted,
            base_version=engine.session.document.version,
        )
    )


def comment_on_crabs(engine):
    return engine.request_comment("mad_scientist", CRABS_AT, CRABS_AT + len(CRABS))


def kinds_after(engine, n):
    return [e.kind for e in engine.events[n:]]


class TestCreate:
    def test_first_event_is_session_created(self, engine):
        assert [e.seq for e in engine.events] == [1]
        assert engine.events[0].kind == "session_created"
        assert engine.session.document.text == STORY
        assert engine.session.document.version == 0
        assert engine.session.document.id == "s1.doc"

    def test_persona_states_ready(self, engine):
        assert set(engine.session.persona_states) == {"mad_scientist", "curious_girl"}


class TestWriterEdit:
    def test_edit_applies_and_logs(self, engine):
        doc = edit(engine, 0, 3, "A")
        assert doc.text.startswith("A reef")
        assert doc.version == 1
        assert engine.events[-1].kind == "edit_applied"
        assert engine.events[-1].actor == "writer"

    def test_version_mismatch_is_atomic(self, engine):
        before = len(engine.events)
        with pytest.raises(VersionMismatchError):
            engine.writer_edit(EditOperation(at=0, deleted_len=0, inserted="x", base_version=7))
        assert len(engine.events) == before

    def test_out_of_bounds_rejected(self, engine):
        with pytest.raises(OutOfBoundsError):
            edit(engine, 10_000, 0, "x")


class TestRequestComment:
    def test_comment_added(self, engine):
        comment = comment_on_crabs(engine)
        assert comment.id == "c1"
        assert comment.state is CommentState.PENDING
        assert comment.anchor.quote == CRABS
        assert engine.events[-1].kind == "comment_added"
        assert engine.events[-1].actor == "mad_scientist"

    def test_unknown_persona(self, engine):
        before = len(engine.events)
        with pytest.raises(NotFoundError):
            engine.request_comment("grumpy_cat", 0, 5)
        assert len(engine.events) == before

    def test_empty_selection(self, engine):
        with pytest.raises(InvalidSelectionError):
            engine.request_comment("curious_girl", 4, 4)

    def test_gateway_failure_leaves_only_error_event(self, engine):
        engine.gateway = FailingGateway()
        before = session_to_dict(engine.session)
        with pytest.raises(GatewayError):
            comment_on_crabs(engine)
        after = session_to_dict(engine.session)
        assert engine.events[-1].kind == "error"
        assert engine.events[-1].payload["code"] == "gateway_failure"
        assert engine.events[-1].payload["op"] == "request_comment"
        before["event_seq"] = after["event_seq"]
        assert before == after


class TestDecisions:
    def test_accept_yields_suggestions_in_order(self, engine):
        comment = comment_on_crabs(engine)
        n = len(engine.events)
        suggestions = engine.accept_comment(comment.id)
        assert kinds_after(engine, n) == [
            "comment_decided",
            "persona_flash",
            "suggestions_generated",
        ]
        assert engine.session.comments["c1"].state is CommentState.ACCEPTED
        assert suggestions
        assert all(s.comment_id == "c1" for s in suggestions)
        flash = engine.session.persona_states["mad_scientist"].flash
        assert flash is not None and flash.affect.value == "happy"

    def test_reject_flashes_negative_affect(self, engine):
        comment = engine.request_comment("curious_girl", 0, 23)
        engine.reject_comment(comment.id)
        assert engine.session.comments[comment.id].state is CommentState.REJECTED
        flash = engine.session.persona_states["curious_girl"].flash
        assert flash is not None and flash.affect.value == "disappointed"
        # Rejection never wakes the writing assistant.
        assert engine.session.suggestions == {}

    def test_double_decision_rejected(self, engine):
        comment = comment_on_crabs(engine)
        engine.accept_comment(comment.id)
        with pytest.raises(IllegalTransitionError):
            engine.accept_comment(comment.id)
        with pytest.raises(IllegalTransitionError):
            engine.reject_comment(comment.id)

    def test_failed_accept_is_retryable(self, engine):
        comment = comment_on_crabs(engine)
        good = engine.gateway
        engine.gateway = FailingGateway()
        with pytest.raises(GatewayError):
            engine.accept_comment(comment.id)
        assert engine.session.comments[comment.id].state is CommentState.PENDING
        assert engine.session.suggestions == {}
        assert engine.events[-1].kind == "error"
        engine.gateway = good
        assert engine.accept_comment(comment.id)

    def test_accept_survives_orphaned_anchor(self, engine):
        comment = comment_on_crabs(engine)
        edit(engine, CRABS_AT, len(CRABS), "Crabs wander.")
        assert engine.session.comments[comment.id].anchor.status is AnchorStatus.ORPHANED
        assert engine.accept_comment(comment.id)

    def test_unknown_comment(self, engine):
        with pytest.raises(NotFoundError):
            engine.accept_comment("c99")


def accepted_suggestion(engine):
    comment = comment_on_crabs(engine)
    return engine.accept_comment(comment.id)[0]


class TestSelectTechnique:
    def test_highlights_anchor_current_text(self, engine):
        suggestion = accepted_suggestion(engine)
        highlights = engine.select_technique(suggestion.id)
        assert highlights
        text = engine.session.document.text
        for h in highlights:
            assert h.state is HighlightState.VISIBLE
            assert text[h.anchor.start : h.anchor.end] == h.anchor.quote
            assert h.suggestion_id == suggestion.id

    def test_reselect_replaces_visible_highlights(self, engine):
        suggestion = accepted_suggestion(engine)
        first = engine.select_technique(suggestion.id)
        second = engine.select_technique(suggestion.id)
        for h in first:
            assert engine.session.highlights[h.id].state is HighlightState.DISMISSED
        for h in second:
            assert engine.session.highlights[h.id].state is HighlightState.VISIBLE
        payload = engine.events[-1].payload
        assert payload["dismissed"] == [h.id for h in first]

    def test_reselect_discards_offered_proposal(self, engine):
        suggestion = accepted_suggestion(engine)
        h1 = engine.select_technique(suggestion.id)[0]
        p1 = engine.request_revision(h1.id)
        engine.select_technique(suggestion.id)
        assert engine.session.proposals[p1.id].state is ProposalState.DISCARDED
        discard = [e for e in engine.events if e.kind == "proposal_discarded"][-1]
        assert discard.payload == {"proposal_id": p1.id, "reason": "highlight_dismissed"}

    def test_unknown_suggestion(self, engine):
        with pytest.raises(NotFoundError):
            engine.select_technique("s99")


class TestRevisionFlow:
    def offered(self, engine):
        suggestion = accepted_suggestion(engine)
        highlight = engine.select_technique(suggestion.id)[0]
        return highlight, engine.request_revision(highlight.id)

    def test_offer_wraps_highlight(self, engine):
        highlight, proposal = self.offered(engine)
        assert proposal.state is ProposalState.OFFERED
        assert proposal.highlight_id == highlight.id
        assert proposal.revised_text == f"[[{highlight.anchor.quote}]]"

    def test_second_request_replaces_offer(self, engine):
        highlight, first = self.offered(engine)
        second = engine.request_revision(highlight.id)
        assert second.id != first.id
        assert engine.session.proposals[first.id].state is ProposalState.DISCARDED
        discard = [e for e in engine.events if e.kind == "proposal_discarded"][-1]
        assert discard.payload["reason"] == "replaced"
        assert engine.session.proposals[second.id].state is ProposalState.OFFERED

    def test_adopt_splices_document(self, engine):
        highlight, proposal = self.offered(engine)
        old_len = len(engine.session.document.text)
        doc = engine.adopt_revision(proposal.id)
        assert f"[[{highlight.anchor.quote}]]" in doc.text
        assert len(doc.text) == old_len + 4
        assert engine.session.proposals[proposal.id].state is ProposalState.ADOPTED
        assert engine.session.highlights[highlight.id].state is HighlightState.CONSUMED
        assert engine.events[-1].actor == "writer"

    def test_adopt_twice_is_illegal(self, engine):
        _, proposal = self.offered(engine)
        engine.adopt_revision(proposal.id)
        with pytest.raises(IllegalTransitionError):
            engine.adopt_revision(proposal.id)

    def test_adopt_discarded_is_stale(self, engine):
        highlight, first = self.offered(engine)
        engine.request_revision(highlight.id)
        with pytest.raises(StaleProposalError):
            engine.adopt_revision(first.id)

    def test_edit_orphans_highlight_and_discards_offer(self, engine):
        highlight, proposal = self.offered(engine)
        n = len(engine.events)
        edit(engine, highlight.anchor.start, len(highlight.anchor.quote), "Gone.")
        tail = kinds_after(engine, n)
        assert tail[0] == "edit_applied"
        assert "anchor_orphaned" in tail
        assert tail[-1] == "proposal_discarded"
        assert engine.session.highlights[highlight.id].anchor.status is AnchorStatus.ORPHANED
        assert engine.session.proposals[proposal.id].state is ProposalState.DISCARDED
        with pytest.raises(StaleProposalError):
            engine.adopt_revision(proposal.id)

    def test_revision_on_dismissed_highlight_illegal(self, engine):
        suggestion = accepted_suggestion(engine)
        first = engine.select_technique(suggestion.id)[0]
        engine.select_technique(suggestion.id)
        with pytest.raises(IllegalTransitionError):
            engine.request_revision(first.id)

    def test_revision_on_orphaned_highlight_illegal(self, engine):
        suggestion = accepted_suggestion(engine)
        highlight = engine.select_technique(suggestion.id)[0]
        edit(engine, highlight.anchor.start, len(highlight.anchor.quote), "Gone.")
        with pytest.raises(IllegalTransitionError):
            engine.request_revision(highlight.id)

    def test_consumed_highlights_survive_reselect(self, engine):
        suggestion = accepted_suggestion(engine)
        highlight = engine.select_technique(suggestion.id)[0]
        proposal = engine.request_revision(highlight.id)
        engine.adopt_revision(proposal.id)
        engine.select_technique(suggestion.id)
        assert engine.session.highlights[highlight.id].state is HighlightState.CONSUMED


def full_scenario(engine):
    edit(engine, 0, 3, "A")
    comment = engine.request_comment("mad_scientist", STORY.index(CRABS) - 2, STORY.index(CRABS) - 2 + len(CRABS))
    rejected = engine.request_comment("curious_girl", 0, 10)
    engine.reject_comment(rejected.id)
    suggestion = engine.accept_comment(comment.id)[0]
    highlight = engine.select_technique(suggestion.id)[0]
    proposal = engine.request_revision(highlight.id)
    engine.adopt_revision(proposal.id)
    edit(engine, 0, 1, "The")


class TestReplay:
    def test_replay_reproduces_state(self, engine):
        full_scenario(engine)
        replayed = replay_events(engine.events)
        assert session_to_dict(replayed) == session_to_dict(engine.session)

    def test_from_events_round_trip(self, engine):
        full_scenario(engine)
        twin = SessionEngine.from_events(engine.events, engine.gateway, SimClock(99.0))
        assert session_to_dict(twin.session) == session_to_dict(engine.session)

    def test_event_serde_round_trip(self, engine):
        full_scenario(engine)
        for event in engine.events:
            assert event_from_dict(event_to_dict(event)) == event

    def test_causality_clean(self, engine):
        full_scenario(engine)
        assert verify_causality(engine.session) == []

    def test_seq_gap_detected(self, engine):
        event = Event(seq=5, timestamp=1.0, actor="writer", kind="edit_applied", payload={})
        with pytest.raises(IntegrityError):
            apply_event(engine.session, event)

    def test_first_event_must_open_session(self):
        event = Event(seq=1, timestamp=0.0, actor="writer", kind="edit_applied", payload={})
        with pytest.raises(IntegrityError):
            apply_event(None, event)

    def test_unknown_kind_detected(self, engine):
        event = Event(seq=2, timestamp=1.0, actor="writer", kind="teleported", payload={})
        with pytest.raises(IntegrityError):
            apply_event(engine.session, event)

    def test_tampered_decision_detected(self, engine):
        comment = comment_on_crabs(engine)
        engine.accept_comment(comment.id)
        tampered = [
            Event(e.seq, e.timestamp, e.actor, e.kind, dict(e.payload)) for e in engine.events
        ]
        # Flip the decision; the suggestions event that follows becomes illegal.
        decided = next(e for e in tampered if e.kind == "comment_decided")
        decided.payload["decision"] = "rejected"
        with pytest.raises(IntegrityError):
            replay_events(tampered)


class TestDisplay:
    def test_comments_for_display_oldest_first(self, engine):
        a = engine.request_comment("mad_scientist", 0, 10)
        b = engine.request_comment("curious_girl", 0, 10)
        c = engine.request_comment("mad_scientist", 11, 23)
        shown = engine.comments_for_display("mad_scientist")
        assert [x.id for x in shown] == [a.id, c.id]
        assert b.id not in [x.id for x in shown]

    def test_events_since(self, engine):
        comment_on_crabs(engine)
        assert [e.seq for e in engine.events_since(1)] == [2]
        assert engine.events_since(99) == []
