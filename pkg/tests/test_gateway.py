"""Prompt templates, reply validation, retry protocol, and providers."""

import json

import httpx
import pytest

from revtogether.errors import (
    ConfigError,
    NoApplicablePassageError,
    ProviderTimeoutError,
    ProviderUnreachableError,
    SchemaViolationExhaustedError,
    UnboundPlaceholderError,
)
from revtogether.gateway import (
    SENTIMENT_VALUES,
    TEMPLATE_IDS,
    Gateway,
    MockProvider,
    ProviderConfig,
    RemoteProvider,
    load_templates,
    mock_complete,
)

STORY = "The reef glows at night. Crabs march in lines. Nobody knows why the reef glows."


class ScriptedProvider:
    """Replays a fixed list of raw replies and records every call."""

    def __init__(self, replies):
        self.replies = list(replies)
        self.calls = []

    def complete(self, messages, schema_id):
        self.calls.append((list(messages), schema_id))
        if not self.replies:
            raise AssertionError("provider called more times than scripted")
        return self.replies.pop(0)


def make_gateway(replies, max_retries=3):
    return Gateway(ScriptedProvider(replies), max_retries=max_retries)


class TestTemplates:
    def test_all_templates_load(self):
        templates = load_templates()
        assert set(templates) == set(TEMPLATE_IDS)
        for template in templates.values():
            assert template.placeholders, template.id
            assert template.schema_id.endswith("_reply")

    def test_render_substitutes_each_placeholder(self):
        templates = load_templates()
        t = templates["commentator_comment"]
        bindings = {name: f"<{name}>" for name in t.placeholders}
        rendered = t.render(bindings)
        for name in t.placeholders:
            assert f"<{name}>" in rendered
            assert "{{" + name + "}}" not in rendered

    def test_render_missing_binding(self):
        t = load_templates()["commentator_comment"]
        with pytest.raises(UnboundPlaceholderError):
            t.render({})

    def test_render_is_single_pass(self):
        # A bound value that looks like a placeholder must not be expanded.
        t = load_templates()["assistant_revision"]
        bindings = {name: "x" for name in t.placeholders}
        some = next(iter(t.placeholders))
        bindings[some] = "{{" + some + "}}"
        rendered = t.render(bindings)
        assert "{{" + some + "}}" in rendered


class TestMockProvider:
    def prompt(self, **blocks):
        return "\n".join(f"<<{k}>>{v}<</{k}>>" for k, v in blocks.items())

    def test_replies_are_deterministic(self):
        p = self.prompt(PERSONA="mad scientist card", STORY=STORY, FOCUS="The reef glows at night.")
        assert mock_complete(p, "comment_reply") == mock_complete(p, "comment_reply")

    def test_sentiment_tracks_focus_length(self):
        for focus in ("abc", "abcd", "abcde", "x" * 31):
            p = self.prompt(PERSONA="p", STORY=STORY, FOCUS=focus)
            payload = json.loads(mock_complete(p, "comment_reply"))
            assert payload["sentiment"] == SENTIMENT_VALUES[len(focus) % 3]

    def test_comment_voice_follows_persona(self):
        p = self.prompt(PERSONA="the Mad Scientist persona", STORY=STORY, FOCUS="Crabs march in lines.")
        payload = json.loads(mock_complete(p, "comment_reply"))
        assert payload["comment_text"].startswith("Bah!")
        p = self.prompt(PERSONA="curious_girl", STORY=STORY, FOCUS="Crabs march in lines.")
        payload = json.loads(mock_complete(p, "comment_reply"))
        assert payload["comment_text"].startswith("Ooh,")

    def test_comment_quotes_first_words_of_focus(self):
        focus = "one two three four five six seven eight nine ten"
        p = self.prompt(PERSONA="p", STORY=STORY, FOCUS=focus)
        payload = json.loads(mock_complete(p, "comment_reply"))
        assert "one two three four five six seven eight" in payload["comment_text"]
        assert "nine" not in payload["comment_text"]

    def test_techniques_come_from_catalog(self):
        p = self.prompt(COMMENT="a comment", FOCUS="f", STORY=STORY)
        payload = json.loads(mock_complete(p, "techniques_reply"))
        names = [t["name"] for t in payload["techniques"]]
        assert len(names) == 2
        assert set(names) < {"Humor", "Analogy and Metaphor", "Emotional Arousal", "Suspense and Surprise"}
        # Ranking depends on the comment text, deterministically.
        assert json.loads(mock_complete(p, "techniques_reply"))["techniques"] == payload["techniques"]

    def test_highlights_are_story_sentences(self):
        p = self.prompt(TECHNIQUE="Humor", COMMENT="c", FOCUS="the reef", STORY=STORY)
        payload = json.loads(mock_complete(p, "highlights_reply"))
        assert payload["passages"]
        for passage in payload["passages"]:
            assert passage in STORY

    def test_revision_wraps_highlight(self):
        p = self.prompt(TECHNIQUE="Humor", COMMENT="c", HIGHLIGHT="Crabs march in lines.", STORY=STORY)
        payload = json.loads(mock_complete(p, "revision_reply"))
        assert payload["revised_text"] == "[[Crabs march in lines.]]"


COMMENT_BINDINGS = {
    "persona_card": "mad scientist",
    "full_story": STORY,
    "focus_text": "Crabs march in lines.",
}


class TestGatewayRetry:
    def good_comment(self):
        return json.dumps({"comment_text": "fine", "sentiment": "neutral"})

    def test_first_try_success(self):
        gw = make_gateway([self.good_comment()])
        reply = gw.complete("commentator_comment", COMMENT_BINDINGS)
        assert reply == {"comment_text": "fine", "sentiment": "neutral"}
        assert len(gw.provider.calls) == 1

    def test_malformed_then_recovered(self):
        gw = make_gateway(["not json at all", self.good_comment()])
        reply = gw.complete("commentator_comment", COMMENT_BINDINGS)
        assert reply["comment_text"] == "fine"
        messages, _ = gw.provider.calls[1]
        # Retry conversation carries the bad reply and a corrective note.
        assert messages[1]["role"] == "assistant"
        assert messages[1]["content"] == "not json at all"
        assert messages[2]["role"] == "user"

    def test_code_fenced_reply_accepted(self):
        fenced = "```json\n" + self.good_comment() + "\n```"
        gw = make_gateway([fenced])
        assert gw.complete("commentator_comment", COMMENT_BINDINGS)["comment_text"] == "fine"

    def test_exhaustion_is_typed_and_bounded(self):
        gw = make_gateway(["{}"] * 10, max_retries=2)
        with pytest.raises(SchemaViolationExhaustedError) as exc_info:
            gw.complete("commentator_comment", COMMENT_BINDINGS)
        assert len(gw.provider.calls) == 3  # max_retries + 1
        assert exc_info.value.attempts == 3

    def test_bad_sentiment_retried(self):
        bad = json.dumps({"comment_text": "fine", "sentiment": "elated"})
        gw = make_gateway([bad, self.good_comment()])
        assert gw.complete("commentator_comment", COMMENT_BINDINGS)["sentiment"] == "neutral"

    def test_overlong_comment_rejected(self):
        bad = json.dumps({"comment_text": "x" * 601, "sentiment": "neutral"})
        gw = make_gateway([bad] * 4)
        with pytest.raises(SchemaViolationExhaustedError):
            gw.complete("commentator_comment", COMMENT_BINDINGS)

    def test_off_catalog_technique_retried(self):
        bad = json.dumps({"techniques": [{"name": "Bribery", "rationale": "r"}]})
        good = json.dumps({"techniques": [{"name": "humor", "rationale": "r"}]})
        gw = make_gateway([bad, good])
        reply = gw.complete(
            "assistant_techniques",
            {"comment_text": "c", "focus_text": "f", "full_story": STORY},
        )
        assert reply["techniques"] == [{"technique_id": "humor", "rationale": "r"}]

    def test_duplicate_technique_rejected(self):
        bad = json.dumps(
            {"techniques": [{"name": "Humor", "rationale": "a"}, {"name": "humor", "rationale": "b"}]}
        )
        gw = make_gateway([bad] * 4)
        with pytest.raises(SchemaViolationExhaustedError):
            gw.complete(
                "assistant_techniques",
                {"comment_text": "c", "focus_text": "f", "full_story": STORY},
            )

    def test_non_substring_passages_dropped(self):
        reply = json.dumps({"passages": ["not in the story", "Crabs march in lines."]})
        gw = make_gateway([reply])
        out = gw.complete(
            "assistant_highlights",
            {"technique_name": "Humor", "comment_text": "c", "focus_text": "f", "full_story": STORY},
        )
        assert out["passages"] == ["Crabs march in lines."]

    def test_no_applicable_passage_not_retried(self):
        reply = json.dumps({"passages": ["nowhere to be found"]})
        gw = make_gateway([reply] * 4)
        with pytest.raises(NoApplicablePassageError):
            gw.complete(
                "assistant_highlights",
                {"technique_name": "Humor", "comment_text": "c", "focus_text": "f", "full_story": STORY},
            )
        assert len(gw.provider.calls) == 1

    def test_empty_revision_rejected(self):
        gw = make_gateway([json.dumps({"revised_text": ""})] * 4)
        with pytest.raises(SchemaViolationExhaustedError):
            gw.complete(
                "assistant_revision",
                {
                    "technique_name": "Humor",
                    "comment_text": "c",
                    "highlight_text": "h",
                    "full_story": STORY,
                },
            )

    def test_unknown_template(self):
        gw = make_gateway([])
        with pytest.raises(ConfigError):
            gw.complete("no_such_template", {})


class TestProviderConfig:
    def test_defaults(self):
        config = ProviderConfig()
        assert config.kind == "mock"
        assert config.max_retries == 3

    def test_from_env(self):
        env = {"REVT_PROVIDER": "remote", "REVT_LLM_ENDPOINT": "http://h/v1", "REVT_LLM_KEY": "k"}
        config = ProviderConfig.from_env(env)
        assert (config.kind, config.endpoint, config.credential) == ("remote", "http://h/v1", "k")

    def test_bad_kind(self):
        with pytest.raises(ConfigError):
            ProviderConfig(kind="imaginary")

    def test_remote_requires_endpoint(self):
        with pytest.raises(ConfigError):
            RemoteProvider(ProviderConfig(kind="remote"))


class TestRemoteProvider:
    def remote(self, handler):
        config = ProviderConfig(kind="remote", endpoint="http://llm.test/v1/chat", credential="sk-1")
        return RemoteProvider(config, transport=httpx.MockTransport(handler))

    def test_success_and_auth_header(self):
        seen = {}

        def handler(request):
            seen["auth"] = request.headers.get("authorization")
            seen["body"] = json.loads(request.content)
            content = json.dumps({"choices": [{"message": {"content": "raw reply"}}]})
            return httpx.Response(200, content=content)

        provider = self.remote(handler)
        out = provider.complete([{"role": "user", "content": "hi"}], "comment_reply")
        assert out == "raw reply"
        assert seen["auth"] == "Bearer sk-1"
        assert seen["body"]["temperature"] == 0
        assert seen["body"]["messages"][0]["content"] == "hi"

    def test_http_error_is_unreachable(self):
        provider = self.remote(lambda request: httpx.Response(503, content=b"busy"))
        with pytest.raises(ProviderUnreachableError):
            provider.complete([{"role": "user", "content": "hi"}], "comment_reply")

    def test_timeout_is_typed(self):
        def handler(request):
            raise httpx.ConnectTimeout("slow")

        provider = self.remote(handler)
        with pytest.raises(ProviderTimeoutError):
            provider.complete([{"role": "user", "content": "hi"}], "comment_reply")

    def test_misshapen_body_is_unreachable(self):
        provider = self.remote(lambda request: httpx.Response(200, content=b'{"nope": 1}'))
        with pytest.raises(ProviderUnreachableError):
            provider.complete([{"role": "user", "content": "hi"}], "comment_reply")


def test_mock_gateway_end_to_end():
    gw = Gateway(MockProvider())
    reply = gw.complete("commentator_comment", COMMENT_BINDINGS)
    assert reply["sentiment"] in SENTIMENT_VALUES
    assert "Crabs march in lines." in reply["comment_text"]
