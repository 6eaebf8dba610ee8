"""Command-line entry points: serve the API, run scripted sessions, replay logs.

`run` drives a whole session from a plain-text script under a simulated
clock, so the same story and script always produce byte-identical outputs.
`replay` folds a recorded event log back into state and reports the first
divergence, if any. Exit codes: 0 success, 1 environment problem, 2 script
or state problem, 3 provider failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path
from shlex import split as shlex_split
from typing import Optional, TextIO

from .clock import SimClock
from .document import EditOperation
from .engine import (
    Event,
    SessionEngine,
    apply_event,
    event_to_dict,
    session_to_dict,
)
from .errors import ConfigError, GatewayError, RevTogetherError
from .gateway import Gateway, ProviderConfig
from .store import FORMAT_VERSION, canonical_json, read_events_file, read_snapshot_file

EXIT_OK = 0
EXIT_ENVIRONMENT = 1
EXIT_SCRIPT = 2
EXIT_PROVIDER = 3

SCRIPT_SESSION_ID = "script-run"
STEP_SECONDS = 1.0


class ScriptError(Exception):
    """A script line that cannot be parsed or resolved against the story."""


# --- script execution ---


def _unique_index(text: str, needle: str, what: str) -> int:
    if needle == "":
        raise ScriptError(f"{what} selector is empty")
    first = text.find(needle)
    if first < 0:
        raise ScriptError(f"{what} {needle!r} not found in story")
    if text.find(needle, first + 1) >= 0:
        raise ScriptError(f"{what} {needle!r} occurs more than once; quote a longer span")
    return first


def _int_arg(token: str, what: str) -> int:
    try:
        return int(token)
    except ValueError:
        raise ScriptError(f"{what} must be an integer, got {token!r}") from None


def _arity(tokens: list[str], n: int) -> None:
    if len(tokens) != n:
        raise ScriptError(
            f"{tokens[0]} takes {n - 1} argument{'s' if n != 2 else ''}, got {len(tokens) - 1}"
        )


def run_step(engine: SessionEngine, tokens: list[str]) -> None:
    """Apply one parsed script line to the session."""
    op = tokens[0]
    text = engine.session.document.text
    version = engine.session.document.version
    if op == "edit":
        _arity(tokens, 4)
        engine.writer_edit(
            EditOperation(
                at=_int_arg(tokens[1], "edit offset"),
                deleted_len=_int_arg(tokens[2], "edit deleted_len"),
                inserted=tokens[3],
                base_version=version,
            )
        )
    elif op == "replace":
        _arity(tokens, 3)
        old = tokens[1]
        at = _unique_index(text, old, "replace target")
        engine.writer_edit(
            EditOperation(at=at, deleted_len=len(old), inserted=tokens[2], base_version=version)
        )
    elif op == "comment":
        if len(tokens) == 3:
            start = _unique_index(text, tokens[2], "comment target")
            end = start + len(tokens[2])
        elif len(tokens) == 4:
            start = _int_arg(tokens[2], "comment start")
            end = _int_arg(tokens[3], "comment end")
        else:
            raise ScriptError("comment takes a persona plus a quoted span or two offsets")
        engine.request_comment(tokens[1], start, end)
    elif op == "accept":
        _arity(tokens, 2)
        engine.accept_comment(tokens[1])
    elif op == "reject":
        _arity(tokens, 2)
        engine.reject_comment(tokens[1])
    elif op == "select":
        _arity(tokens, 2)
        engine.select_technique(tokens[1])
    elif op == "revise":
        _arity(tokens, 2)
        engine.request_revision(tokens[1])
    elif op == "adopt":
        _arity(tokens, 2)
        engine.adopt_revision(tokens[1])
    else:
        raise ScriptError(f"unknown script op {op!r}")


def _shorten(text: str, limit: int = 72) -> str:
    flat = " ".join(text.split())
    if len(flat) <= limit:
        return flat
    return flat[: limit - 3] + "..."


def describe_event(event: Event) -> str:
    """One transcript line's worth of detail for an event."""
    p = event.payload
    kind = event.kind
    if kind == "session_created":
        return f"session {p['session_id']} opened, story is {len(p['text'])} chars"
    if kind == "edit_applied":
        return (
            f"edit at {p['at']}: removed {p['deleted_len']}, inserted "
            f"{len(p['inserted'])} chars (v{p['base_version']} -> v{p['base_version'] + 1})"
        )
    if kind == "comment_added":
        c = p["comment"]
        return f"{c['id']} by {c['persona_id']} ({c['sentiment']}): \"{_shorten(c['text'])}\""
    if kind == "comment_decided":
        return f"{p['comment_id']} {p['decision']}"
    if kind == "persona_flash":
        return f"{p['persona_id']} flashes {p['affect']} until t={p['expires_at']:g}"
    if kind == "suggestions_generated":
        names = ", ".join(f"{s['id']}={s['technique_id']}" for s in p["suggestions"])
        return f"for {p['comment_id']}: {names}"
    if kind == "highlights_generated":
        ids = ", ".join(h["id"] for h in p["highlights"])
        note = f" (dismissed {', '.join(p['dismissed'])})" if p["dismissed"] else ""
        return f"for {p['suggestion_id']}: {ids}{note}"
    if kind == "revision_offered":
        return f"{p['proposal_id']} on {p['highlight_id']}: \"{_shorten(p['revised_text'])}\""
    if kind == "revision_adopted":
        return f"{p['proposal_id']} spliced at {p['at']} (v{p['base_version']} -> v{p['base_version'] + 1})"
    if kind == "proposal_discarded":
        return f"{p['proposal_id']} ({p['reason']})"
    if kind == "anchor_orphaned":
        return f"{p['kind']} {p['id']}"
    if kind == "error":
        return f"{p['op']}: {p['code']}: {_shorten(p['message'])}"
    return canonical_json(p)


def render_transcript(events: list[Event]) -> str:
    lines = []
    for event in events:
        lines.append(
            f"[{event.seq:>4}] t={event.timestamp:<6g} {event.actor:<13} "
            f"{event.kind:<22} {describe_event(event)}"
        )
    return "\n".join(lines) + "\n" if lines else ""


def write_run_outputs(out_dir: Path, engine: SessionEngine) -> None:
    """Persist a run: final story, replayable log + snapshot, transcript."""
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "final_story.txt").write_text(engine.session.document.text, encoding="utf-8")
    with (out_dir / "events.jsonl").open("w", encoding="utf-8") as handle:
        for event in engine.events:
            record = event_to_dict(event)
            record["format_version"] = FORMAT_VERSION
            handle.write(canonical_json(record) + "\n")
    snapshot = {
        "format_version": FORMAT_VERSION,
        "watermark": engine.session.event_seq,
        "session": session_to_dict(engine.session),
    }
    (out_dir / "snapshot.json").write_text(canonical_json(snapshot) + "\n", encoding="utf-8")
    (out_dir / "transcript.txt").write_text(render_transcript(engine.events), encoding="utf-8")


def _provider_config(kind: str, *, stderr: TextIO) -> Optional[ProviderConfig]:
    """Build provider config from the environment; None means unusable."""
    try:
        config = ProviderConfig.from_env()
    except ConfigError as exc:
        print(f"provider configuration: {exc}", file=stderr)
        return None
    if kind and kind != config.kind:
        try:
            config = ProviderConfig(
                kind=kind,
                endpoint=config.endpoint,
                credential=config.credential,
                max_retries=config.max_retries,
                timeout=config.timeout,
            )
        except ConfigError as exc:
            print(f"provider configuration: {exc}", file=stderr)
            return None
    if config.kind == "remote":
        if not config.endpoint:
            print("remote provider needs REVT_LLM_ENDPOINT", file=stderr)
            return None
        if not config.credential:
            print("remote provider needs REVT_LLM_KEY", file=stderr)
            return None
    return config


# --- subcommands ---


def cmd_serve(config: Optional[ProviderConfig] = None, *, stderr: Optional[TextIO] = None) -> int:
    stderr = stderr if stderr is not None else sys.stderr
    bind = os.environ.get("REVT_BIND_ADDR", "127.0.0.1:8000")
    host, sep, port_text = bind.rpartition(":")
    if not sep or not host:
        print(f"bad REVT_BIND_ADDR {bind!r}: expected host:port", file=stderr)
        return EXIT_ENVIRONMENT
    try:
        port = int(port_text)
    except ValueError:
        print(f"bad REVT_BIND_ADDR {bind!r}: port {port_text!r} is not a number", file=stderr)
        return EXIT_ENVIRONMENT
    if config is None:
        config = _provider_config("", stderr=stderr)
        if config is None:
            return EXIT_ENVIRONMENT

    import uvicorn

    from .api import create_app

    try:
        app = create_app(provider_config=config)
    except (ConfigError, OSError) as exc:
        print(f"cannot start: {exc}", file=stderr)
        return EXIT_ENVIRONMENT
    uvicorn.run(app, host=host, port=port, log_level="info")
    return EXIT_OK


def cmd_run_script(
    story_file: str,
    script_file: str,
    out_dir: str,
    *,
    provider: str = "mock",
    stderr: Optional[TextIO] = None,
) -> int:
    stderr = stderr if stderr is not None else sys.stderr
    try:
        story = Path(story_file).read_text(encoding="utf-8")
    except OSError as exc:
        print(f"cannot read story: {exc}", file=stderr)
        return EXIT_ENVIRONMENT
    try:
        script = Path(script_file).read_text(encoding="utf-8")
    except OSError as exc:
        print(f"cannot read script: {exc}", file=stderr)
        return EXIT_ENVIRONMENT
    config = _provider_config(provider, stderr=stderr)
    if config is None:
        return EXIT_ENVIRONMENT
    try:
        gateway = Gateway.from_config(config)
    except ConfigError as exc:
        print(f"provider configuration: {exc}", file=stderr)
        return EXIT_ENVIRONMENT

    clock = SimClock(0.0)
    engine = SessionEngine.create(SCRIPT_SESSION_ID, story, gateway, clock)
    exit_code = EXIT_OK
    step = 0
    for lineno, line in enumerate(script.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        step += 1
        clock.advance(STEP_SECONDS)
        try:
            tokens = shlex_split(stripped)
        except ValueError as exc:
            print(f"step {step} (line {lineno}): {exc}: {stripped!r}", file=stderr)
            exit_code = EXIT_SCRIPT
            break
        try:
            run_step(engine, tokens)
        except GatewayError as exc:
            print(f"step {step} (line {lineno}): provider: {exc}", file=stderr)
            exit_code = EXIT_PROVIDER
            break
        except (ScriptError, RevTogetherError) as exc:
            print(f"step {step} (line {lineno}): {exc}", file=stderr)
            exit_code = EXIT_SCRIPT
            break
    try:
        write_run_outputs(Path(out_dir), engine)
    except OSError as exc:
        print(f"cannot write outputs: {exc}", file=stderr)
        return EXIT_ENVIRONMENT
    return exit_code


def cmd_replay(
    session_dir_path: str,
    *,
    stdout: Optional[TextIO] = None,
    stderr: Optional[TextIO] = None,
) -> int:
    stdout = stdout if stdout is not None else sys.stdout
    stderr = stderr if stderr is not None else sys.stderr
    session_dir = Path(session_dir_path)
    events_path = session_dir / "events.jsonl"
    snapshot_path = session_dir / "snapshot.json"
    if not events_path.exists():
        print(f"no events.jsonl in {session_dir}", file=stderr)
        return EXIT_ENVIRONMENT
    try:
        events = read_events_file(events_path)
    except RevTogetherError as exc:
        print(f"divergence: {exc}", file=stdout)
        return EXIT_SCRIPT
    snapshot = None
    if snapshot_path.exists():
        try:
            snapshot = read_snapshot_file(snapshot_path)
        except RevTogetherError as exc:
            print(f"divergence: snapshot unreadable: {exc}", file=stdout)
            return EXIT_SCRIPT

    session = None
    watermark = snapshot["watermark"] if snapshot else None
    matched = False
    for event in events:
        try:
            session = apply_event(session, event)
        except RevTogetherError as exc:
            print(f"divergence at seq {event.seq}: {exc}", file=stdout)
            return EXIT_SCRIPT
        if watermark is not None and event.seq == watermark:
            if session_to_dict(session) != snapshot["session"]:
                print(
                    f"divergence at seq {event.seq}: replayed state does not match snapshot",
                    file=stdout,
                )
                return EXIT_SCRIPT
            matched = True
    if session is None:
        print(f"no events.jsonl in {session_dir}", file=stderr)
        return EXIT_ENVIRONMENT
    if watermark is not None and not matched:
        print(f"divergence: snapshot watermark {watermark} beyond log end", file=stdout)
        return EXIT_SCRIPT
    print(f"replayed {len(events)} events, document at v{session.document.version}", file=stdout)
    if snapshot is None:
        print("no snapshot present; state rebuilt from the log alone", file=stdout)
    else:
        print(f"snapshot at seq {watermark}: identical", file=stdout)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="revtogether",
        description="Collaborative story revision with persona commentators.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the HTTP API server")
    serve.set_defaults(func=lambda args: cmd_serve())

    run = sub.add_parser("run", help="drive a session from a script, deterministically")
    run.add_argument("--story", required=True, help="path to the initial story text")
    run.add_argument("--script", required=True, help="path to the step script")
    run.add_argument("--out", required=True, help="directory for run outputs")
    run.add_argument(
        "--provider",
        choices=("mock", "remote"),
        default="mock",
        help="LLM provider (default: mock)",
    )
    run.set_defaults(
        func=lambda args: cmd_run_script(args.story, args.script, args.out, provider=args.provider)
    )

    replay = sub.add_parser("replay", help="rebuild state from a recorded session directory")
    replay.add_argument("session_dir", help="directory holding events.jsonl (and snapshot.json)")
    replay.set_defaults(func=lambda args: cmd_replay(args.session_dir))

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
