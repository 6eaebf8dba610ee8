"""Prompt templates, reply schemas, and the language-model gateway.

Every model call in the package goes through Gateway.complete: it renders a
packaged template, sends the prompt to the configured provider, validates the
reply against the template's declared schema, and when validation fails it
retries the conversation with a corrective message until the retry budget
runs out.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
from dataclasses import dataclass
from typing import Mapping, Optional, Protocol

import httpx

from .assets import asset_root, parse_front_matter
from .errors import (
    ConfigError,
    NoApplicablePassageError,
    ProviderTimeoutError,
    ProviderUnreachableError,
    SchemaViolationExhaustedError,
    UnboundPlaceholderError,
)
from .techniques import CATALOG, lookup_technique

TEMPLATE_IDS = (
    "commentator_comment",
    "assistant_techniques",
    "assistant_highlights",
    "assistant_revision",
)

SENTIMENT_VALUES = ("positive", "neutral", "negative")

_PLACEHOLDER_RE = re.compile(r"\{\{([a-z_]+)\}\}")


class SchemaViolation(ValueError):
    """A provider reply failed validation; each one drives a corrective retry."""


@dataclass(frozen=True)
class PromptTemplate:
    """One packaged prompt with its placeholder set and reply schema."""

    id: str
    schema_id: str
    body: str
    placeholders: frozenset[str]

    def render(self, bindings: Mapping[str, object]) -> str:
        """Substitute every placeholder in a single pass.

        A single pass means placeholder-looking text inside a bound value is
        never substituted again, so story text cannot smuggle in bindings.
        """
        missing = [name for name in sorted(self.placeholders) if name not in bindings]
        if missing:
            raise UnboundPlaceholderError(self.id, missing)
        return _PLACEHOLDER_RE.sub(lambda m: str(bindings[m.group(1)]), self.body)


def load_templates(root=None) -> dict[str, PromptTemplate]:
    """Read the packaged prompt templates, keyed by template id."""
    if root is None:
        root = asset_root().joinpath("prompts")
    templates: dict[str, PromptTemplate] = {}
    for entry in sorted(root.iterdir(), key=lambda e: e.name):
        if not entry.name.endswith(".txt"):
            continue
        meta, body = parse_front_matter(entry.read_text(encoding="utf-8"))
        for key in ("id", "schema"):
            if key not in meta:
                raise ConfigError(f"prompt {entry.name}: missing {key!r} in front matter")
        if meta["id"] in templates:
            raise ConfigError(f"duplicate prompt template id {meta['id']!r}")
        templates[meta["id"]] = PromptTemplate(
            id=meta["id"],
            schema_id=meta["schema"],
            body=body,
            placeholders=frozenset(_PLACEHOLDER_RE.findall(body)),
        )
    missing = [t for t in TEMPLATE_IDS if t not in templates]
    if missing:
        raise ConfigError(f"prompt templates missing: {', '.join(missing)}")
    return templates


# --- reply parsing and validation ---


def _parse_reply(raw: str):
    """Parse a reply as JSON, tolerating code fences and surrounding prose."""
    s = raw.strip()
    if s.startswith("```"):
        lines = s.split("\n")
        if len(lines) >= 2 and lines[-1].strip().startswith("```"):
            lines = lines[:-1]
        s = "\n".join(lines[1:]).strip()
    try:
        return json.loads(s)
    except json.JSONDecodeError:
        pass
    start = s.find("{")
    end = s.rfind("}")
    if 0 <= start < end:
        try:
            return json.loads(s[start : end + 1])
        except json.JSONDecodeError:
            pass
    raise SchemaViolation("reply is not valid JSON")


def _validate_comment(payload, bindings):
    if not isinstance(payload, dict):
        raise SchemaViolation("reply must be a JSON object")
    text = payload.get("comment_text")
    if not isinstance(text, str) or not text.strip():
        raise SchemaViolation("comment_text must be a nonempty string")
    if len(text) > 600:
        raise SchemaViolation("comment_text longer than 600 characters")
    sentiment = payload.get("sentiment")
    if sentiment not in SENTIMENT_VALUES:
        raise SchemaViolation("sentiment must be positive, neutral or negative")
    return {"comment_text": text, "sentiment": sentiment}


def _validate_techniques(payload, bindings):
    if isinstance(payload, list):
        payload = {"techniques": payload}
    if not isinstance(payload, dict):
        raise SchemaViolation("reply must be a JSON object")
    entries = payload.get("techniques")
    if not isinstance(entries, list):
        raise SchemaViolation("techniques must be a list")
    if not 1 <= len(entries) <= 4:
        raise SchemaViolation("between one and four techniques are required")
    out = []
    seen: set[str] = set()
    for entry in entries:
        if not isinstance(entry, dict):
            raise SchemaViolation("each technique must be an object")
        label = entry.get("name", entry.get("technique_id"))
        technique = lookup_technique(label)
        if technique is None:
            raise SchemaViolation(f"unknown technique {label!r}")
        if technique.id in seen:
            raise SchemaViolation(f"technique {technique.name} repeated")
        seen.add(technique.id)
        rationale = entry.get("rationale")
        if not isinstance(rationale, str) or not rationale.strip():
            raise SchemaViolation("each technique needs a nonempty rationale")
        out.append({"technique_id": technique.id, "rationale": rationale})
    return {"techniques": out}


def _validate_highlights(payload, bindings):
    if isinstance(payload, list):
        payload = {"passages": payload}
    if not isinstance(payload, dict):
        raise SchemaViolation("reply must be a JSON object")
    entries = payload.get("passages", payload.get("highlights"))
    if not isinstance(entries, list):
        raise SchemaViolation("passages must be a list")
    if len(entries) > 8:
        raise SchemaViolation("at most eight passages are allowed")
    for entry in entries:
        if not isinstance(entry, str):
            raise SchemaViolation("each passage must be a string")
    story = str(bindings.get("full_story", ""))
    # Passages that are not verbatim substrings of the story cannot be
    # anchored, so they are dropped rather than argued over.
    kept = []
    for entry in entries:
        if entry and entry in story and entry not in kept:
            kept.append(entry)
    if not kept:
        raise NoApplicablePassageError("no reply passage matches the story verbatim")
    return {"passages": kept}


def _validate_revision(payload, bindings):
    if not isinstance(payload, dict):
        raise SchemaViolation("reply must be a JSON object")
    text = payload.get("revised_text")
    if not isinstance(text, str) or not text:
        raise SchemaViolation("revised_text must be a nonempty string")
    return {"revised_text": text}


_VALIDATORS = {
    "comment_reply": _validate_comment,
    "techniques_reply": _validate_techniques,
    "highlights_reply": _validate_highlights,
    "revision_reply": _validate_revision,
}


def validate_reply(schema_id: str, payload, bindings: Mapping[str, object]):
    try:
        validator = _VALIDATORS[schema_id]
    except KeyError:
        raise ConfigError(f"no validator for schema {schema_id!r}") from None
    return validator(payload, bindings)


# --- providers ---


class Provider(Protocol):
    def complete(self, messages: list[dict[str, str]], schema_id: str) -> str: ...


@dataclass(frozen=True)
class ProviderConfig:
    kind: str = "mock"
    endpoint: Optional[str] = None
    credential: Optional[str] = None
    max_retries: int = 3
    timeout: float = 30.0

    def __post_init__(self):
        if self.kind not in ("mock", "remote"):
            raise ConfigError(f"provider kind must be mock or remote, not {self.kind!r}")
        if self.max_retries < 0:
            raise ConfigError("max_retries cannot be negative")

    @classmethod
    def from_env(cls, environ: Optional[Mapping[str, str]] = None) -> "ProviderConfig":
        env = os.environ if environ is None else environ
        return cls(
            kind=env.get("REVT_PROVIDER", "mock"),
            endpoint=env.get("REVT_LLM_ENDPOINT"),
            credential=env.get("REVT_LLM_KEY"),
        )


# --- the deterministic mock provider ---

REVISION_PREFIX = "[["
REVISION_SUFFIX = "]]"

_BLOCK_RE = re.compile(r"<<([A-Z]+)>>(.*?)<</\1>>", re.S)
_SENTENCE_RE = re.compile(r"[^.!?]*[.!?]+|[^.!?]+$")

_COMMENT_SHAPES = (
    ("mad scientist", 'Bah! Reading "{snippet}" I demand more rigor from this passage.'),
    ("curious girl", 'Ooh, when I read "{snippet}" I wonder what happens next and why.'),
)
_COMMENT_FALLBACK = 'Reading "{snippet}" this passage stands out to me.'


def _stable_hash(text: str) -> int:
    # Process-independent ranking hash; builtin hash() is salted per run.
    return int.from_bytes(hashlib.sha256(text.encode("utf-8")).digest()[:8], "big")


def _prompt_blocks(prompt: str) -> dict[str, str]:
    return {m.group(1): m.group(2) for m in _BLOCK_RE.finditer(prompt)}


def mock_complete(prompt: str, schema_id: str) -> str:
    """Deterministic offline stand-in for a language model.

    Replies are pure functions of the rendered prompt, so identical sessions
    produce byte-identical transcripts on any machine:

    - sentiment cycles positive, neutral, negative by focus length mod 3
    - comment text is a fixed persona-flavored shape quoting the first
      eight words of the focus
    - techniques are the two catalog names that hash lowest against the
      comment text
    - highlights are the story sentences containing the longest focus word,
      capped at three
    - a revision wraps the highlighted text in fixed markers
    """
    blocks = _prompt_blocks(prompt)
    if schema_id == "comment_reply":
        focus = blocks.get("FOCUS", "")
        sentiment = SENTIMENT_VALUES[len(focus) % 3]
        snippet = " ".join(focus.split()[:8])[:160]
        persona = blocks.get("PERSONA", "").lower()
        shape = _COMMENT_FALLBACK
        for needle, candidate in _COMMENT_SHAPES:
            if needle in persona or needle.replace(" ", "_") in persona:
                shape = candidate
                break
        payload = {"comment_text": shape.format(snippet=snippet), "sentiment": sentiment}
    elif schema_id == "techniques_reply":
        comment = blocks.get("COMMENT", "")
        names = sorted(
            (t.name for t in CATALOG),
            key=lambda name: (_stable_hash(name + "\x1f" + comment), name),
        )[:2]
        payload = {
            "techniques": [
                {"name": name, "rationale": f"{name} fits what this comment is reacting to."}
                for name in names
            ]
        }
    elif schema_id == "highlights_reply":
        focus = blocks.get("FOCUS", "")
        story = blocks.get("STORY", "")
        words = focus.split()
        passages: list[str] = []
        if words:
            longest = max(words, key=len)
            for match in _SENTENCE_RE.finditer(story):
                sentence = match.group().strip()
                if sentence and longest in sentence and sentence not in passages:
                    passages.append(sentence)
                if len(passages) == 3:
                    break
        payload = {"passages": passages}
    elif schema_id == "revision_reply":
        payload = {"revised_text": REVISION_PREFIX + blocks.get("HIGHLIGHT", "") + REVISION_SUFFIX}
    else:
        raise ConfigError(f"mock provider has no rule for schema {schema_id!r}")
    return json.dumps(payload, ensure_ascii=False, sort_keys=True)


class MockProvider:
    """Provider that computes replies locally; see mock_complete."""

    def complete(self, messages: list[dict[str, str]], schema_id: str) -> str:
        # The first message is always the rendered template; corrective
        # retries never change what the mock would answer.
        return mock_complete(messages[0]["content"], schema_id)


class RemoteProvider:
    """HTTP chat-completions client.

    Any transport or response-shape problem surfaces as a typed gateway
    error; nothing from httpx leaks past this class.
    """

    def __init__(self, config: ProviderConfig, transport: Optional[httpx.BaseTransport] = None):
        if not config.endpoint:
            raise ConfigError("remote provider needs an endpoint (REVT_LLM_ENDPOINT)")
        self._endpoint = config.endpoint
        self._headers = {}
        if config.credential:
            self._headers["Authorization"] = f"Bearer {config.credential}"
        self._client = httpx.Client(timeout=config.timeout, transport=transport)

    def complete(self, messages: list[dict[str, str]], schema_id: str) -> str:
        body = {"messages": messages, "temperature": 0}
        try:
            response = self._client.post(self._endpoint, json=body, headers=self._headers)
        except httpx.TimeoutException as exc:
            raise ProviderTimeoutError(f"provider timed out: {exc}") from exc
        except httpx.HTTPError as exc:
            raise ProviderUnreachableError(f"provider unreachable: {exc}") from exc
        if response.status_code >= 400:
            raise ProviderUnreachableError(f"provider answered HTTP {response.status_code}")
        try:
            content = response.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise ProviderUnreachableError(f"provider reply has unexpected shape: {exc}") from exc
        if not isinstance(content, str):
            raise ProviderUnreachableError("provider reply content is not text")
        return content

    def close(self):
        self._client.close()


def make_provider(config: ProviderConfig) -> Provider:
    if config.kind == "mock":
        return MockProvider()
    return RemoteProvider(config)


# --- the gateway ---


class Gateway:
    """Single choke point between the application and any provider."""

    def __init__(
        self,
        provider: Provider,
        *,
        max_retries: int = 3,
        templates: Optional[dict[str, PromptTemplate]] = None,
    ):
        self.provider = provider
        self.max_retries = max_retries
        self.templates = templates if templates is not None else load_templates()

    @classmethod
    def from_config(cls, config: ProviderConfig) -> "Gateway":
        return cls(make_provider(config), max_retries=config.max_retries)

    def complete(self, template_id: str, bindings: Mapping[str, object]):
        """Render, send, validate; returns the schema-shaped payload.

        Schema violations are retried with a corrective follow-up message,
        at most max_retries times beyond the first attempt. Provider
        transport errors and NoApplicablePassageError are not retried.
        """
        template = self.templates.get(template_id)
        if template is None:
            raise ConfigError(f"unknown prompt template {template_id!r}")
        prompt = template.render(bindings)
        messages = [{"role": "user", "content": prompt}]
        last_raw = ""
        for _ in range(self.max_retries + 1):
            raw = self.provider.complete(messages, template.schema_id)
            last_raw = raw
            try:
                payload = _parse_reply(raw)
                return validate_reply(template.schema_id, payload, bindings)
            except SchemaViolation as exc:
                messages = messages + [
                    {"role": "assistant", "content": raw},
                    {
                        "role": "user",
                        "content": (
                            f"That reply was rejected: {exc}. Send the"
                            f" {template.schema_id} JSON object again, matching the"
                            " schema exactly, with no text outside the JSON."
                        ),
                    },
                ]
        raise SchemaViolationExhaustedError(
            f"{template_id}: no valid {template.schema_id} reply"
            f" after {self.max_retries + 1} attempts",
            last_raw=last_raw,
            attempts=self.max_retries + 1,
        )
