"""Durable session persistence: snapshots, append-only event logs, locks.

Layout under the data directory:

    sessions/<id>/snapshot.json   current state plus the event-seq watermark
    sessions/<id>/events.jsonl    one event per line, append-only
    sessions/<id>/lock            pid of the process allowed to write

Both files are UTF-8 with LF line endings and carry format_version. Loading
replays any events past the snapshot watermark, so a crash between an event
append and the next snapshot loses nothing.
"""

from __future__ import annotations

import json
import os
import re
import threading
from pathlib import Path
from typing import Optional

from .engine import (
    Event,
    Session,
    apply_event,
    event_from_dict,
    event_to_dict,
    session_from_dict,
    session_to_dict,
)
from .errors import (
    ConfigError,
    FormatVersionError,
    IntegrityError,
    NotFoundError,
    RevTogetherError,
    SessionLockError,
)

FORMAT_VERSION = 1

_ID_RE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9._-]*$")


def canonical_json(obj) -> str:
    """Stable JSON encoding: sorted keys, no spaces, raw unicode."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def _pid_alive(pid: int) -> bool:
    try:
        os.kill(pid, 0)
    except ProcessLookupError:
        return False
    except PermissionError:
        return True
    return True


class SessionStore:
    """One directory per session; a pid lock file guards each for writing.

    The pid check is how stale locks from crashed processes get reclaimed;
    two stores inside one process are therefore not protected against each
    other, only cross-process writers are.
    """

    def __init__(self, root):
        self.root = Path(root)
        self.sessions_root = self.root / "sessions"
        self.sessions_root.mkdir(parents=True, exist_ok=True)
        self._held: set[str] = set()
        self._mutex = threading.Lock()

    # --- paths ---

    def _dir(self, session_id: str) -> Path:
        if not _ID_RE.match(session_id):
            raise ConfigError(f"session id {session_id!r} is not filesystem-safe")
        return self.sessions_root / session_id

    def list_sessions(self) -> list[str]:
        return sorted(p.name for p in self.sessions_root.iterdir() if p.is_dir())

    # --- locking ---

    def acquire(self, session_id: str) -> None:
        with self._mutex:
            self._acquire_locked(session_id)

    def _acquire_locked(self, session_id: str) -> None:
        if session_id in self._held:
            return
        sdir = self._dir(session_id)
        sdir.mkdir(parents=True, exist_ok=True)
        lock_path = sdir / "lock"
        for _ in range(2):
            try:
                fd = os.open(lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
            except FileExistsError:
                try:
                    pid = int(lock_path.read_text(encoding="utf-8").strip() or "0")
                except (OSError, ValueError):
                    pid = 0
                if pid == os.getpid():
                    self._held.add(session_id)
                    return
                if pid > 0 and _pid_alive(pid):
                    raise SessionLockError(
                        f"session {session_id} is locked by live pid {pid}"
                    )
                # Dead owner: reclaim and retry the exclusive create.
                try:
                    lock_path.unlink()
                except FileNotFoundError:
                    pass
                continue
            os.write(fd, str(os.getpid()).encode("ascii"))
            os.close(fd)
            self._held.add(session_id)
            return
        raise SessionLockError(f"could not acquire lock for session {session_id}")

    def release(self, session_id: str) -> None:
        with self._mutex:
            if session_id not in self._held:
                return
            try:
                (self._dir(session_id) / "lock").unlink()
            except FileNotFoundError:
                pass
            self._held.discard(session_id)

    def close(self) -> None:
        for session_id in list(self._held):
            self.release(session_id)

    # --- save ---

    def save(self, session: Session, events: list[Event]) -> None:
        """Append unseen events, then atomically rewrite the snapshot."""
        if events and events[-1].seq != session.event_seq:
            raise IntegrityError(
                "save_consistency",
                f"session at seq {session.event_seq} but log ends at {events[-1].seq}",
            )
        with self._mutex:
            self._acquire_locked(session.id)
            sdir = self._dir(session.id)
            events_path = sdir / "events.jsonl"
            disk_seq = self._last_disk_seq(events_path)
            fresh = [e for e in events if e.seq > disk_seq]
            if fresh:
                if fresh[0].seq != disk_seq + 1:
                    raise IntegrityError(
                        "save_gap",
                        f"log on disk ends at {disk_seq}, next event is {fresh[0].seq}",
                    )
                with open(events_path, "a", encoding="utf-8", newline="") as f:
                    for event in fresh:
                        record = event_to_dict(event)
                        record["format_version"] = FORMAT_VERSION
                        f.write(canonical_json(record) + "\n")
                    f.flush()
                    os.fsync(f.fileno())
            snapshot = {
                "format_version": FORMAT_VERSION,
                "watermark": session.event_seq,
                "session": session_to_dict(session),
            }
            tmp = sdir / "snapshot.json.tmp"
            with open(tmp, "w", encoding="utf-8", newline="") as f:
                f.write(canonical_json(snapshot) + "\n")
                f.flush()
                os.fsync(f.fileno())
            os.replace(tmp, sdir / "snapshot.json")

    def _last_disk_seq(self, events_path: Path) -> int:
        if not events_path.exists():
            return 0
        last = None
        with open(events_path, encoding="utf-8") as f:
            for line in f:
                if line.strip():
                    last = line
        if last is None:
            return 0
        try:
            seq = json.loads(last)["seq"]
        except (ValueError, KeyError, TypeError) as exc:
            raise IntegrityError("event_json", f"unreadable log tail: {exc}") from exc
        if not isinstance(seq, int):
            raise IntegrityError("event_shape", "log tail seq is not an integer")
        return seq

    # --- load ---

    def load(self, session_id: str) -> tuple[Session, list[Event]]:
        """Rebuild a session by replaying its full log, verified end to end.

        The snapshot is not trusted blindly: replaying from the first event
        must reproduce it exactly at the watermark, so tampering anywhere in
        the history is caught here, not just past the last snapshot. Missing
        session is not-found; anything malformed is an integrity error naming
        the check that failed, and nothing partial is returned.
        """
        sdir = self._dir(session_id)
        snapshot_path = sdir / "snapshot.json"
        events_path = sdir / "events.jsonl"
        if not snapshot_path.exists() and not events_path.exists():
            raise NotFoundError("session", session_id)

        events = read_events_file(events_path)
        last_seq = events[-1].seq if events else 0

        if not snapshot_path.exists():
            # Snapshot missing entirely: the log alone must reconstruct.
            session = self._replay(None, events)
            return session, events

        snapshot = read_snapshot_file(snapshot_path)
        watermark = snapshot["watermark"]
        if watermark < 1:
            raise IntegrityError("watermark", f"watermark {watermark} before first event")
        if last_seq < watermark:
            raise IntegrityError(
                "truncated_log", f"log ends at {last_seq}, snapshot watermark {watermark}"
            )
        try:
            stored = session_from_dict(snapshot["session"])
        except (KeyError, TypeError, ValueError) as exc:
            raise IntegrityError("snapshot_shape", str(exc)) from exc
        if stored.id != session_id:
            raise IntegrityError(
                "session_id", f"snapshot is for {stored.id!r}, directory says {session_id!r}"
            )
        if stored.event_seq != watermark:
            raise IntegrityError(
                "watermark",
                f"snapshot says {watermark} but session state says {stored.event_seq}",
            )
        session: Optional[Session] = None
        for event in events:
            try:
                session = apply_event(session, event)
            except RevTogetherError as exc:
                raise IntegrityError("replay", f"event seq {event.seq}: {exc}") from exc
            if event.seq == watermark and session_to_dict(session) != session_to_dict(stored):
                raise IntegrityError(
                    "snapshot_divergence",
                    f"replayed state at seq {watermark} differs from the snapshot",
                )
        assert session is not None  # last_seq >= watermark >= 1
        return session, events

    def _replay(self, base: Optional[Session], events: list[Event]) -> Session:
        session = base
        for event in events:
            try:
                session = apply_event(session, event)
            except RevTogetherError as exc:
                raise IntegrityError("replay", f"event seq {event.seq}: {exc}") from exc
        if session is None:
            raise IntegrityError("empty", "no snapshot and no events")
        return session


def read_snapshot_file(snapshot_path: Path) -> dict:
    """Parse and structurally validate a snapshot.json."""
    try:
        data = json.loads(snapshot_path.read_text(encoding="utf-8"))
    except ValueError as exc:
        raise IntegrityError("snapshot_json", str(exc)) from exc
    if not isinstance(data, dict):
        raise IntegrityError("snapshot_shape", "snapshot is not an object")
    version = data.get("format_version")
    if version is None:
        raise IntegrityError("format_version_missing", "snapshot lacks format_version")
    if not isinstance(version, int) or version > FORMAT_VERSION:
        raise FormatVersionError(version, FORMAT_VERSION)
    watermark = data.get("watermark")
    if not isinstance(watermark, int) or watermark < 0:
        raise IntegrityError("watermark", f"bad watermark {watermark!r}")
    if not isinstance(data.get("session"), dict):
        raise IntegrityError("snapshot_shape", "snapshot lacks a session object")
    return data


def read_events_file(events_path: Path) -> list[Event]:
    """Parse an events.jsonl, enforcing shape and gap-free seq order."""
    if not events_path.exists():
        return []
    events: list[Event] = []
    raw = events_path.read_text(encoding="utf-8")
    for n, line in enumerate(raw.splitlines(), start=1):
        try:
            data = json.loads(line)
        except ValueError as exc:
            raise IntegrityError("event_json", f"line {n}: {exc}") from exc
        if not isinstance(data, dict):
            raise IntegrityError("event_shape", f"line {n}: not an object")
        version = data.get("format_version")
        if version is None:
            raise IntegrityError(
                "format_version_missing", f"line {n}: event lacks format_version"
            )
        if not isinstance(version, int) or version > FORMAT_VERSION:
            raise FormatVersionError(version, FORMAT_VERSION)
        try:
            event = event_from_dict(data)
        except KeyError as exc:
            raise IntegrityError("event_shape", f"line {n}: missing {exc}") from exc
        if (
            not isinstance(event.seq, int)
            or not isinstance(event.timestamp, (int, float))
            or isinstance(event.timestamp, bool)
            or not isinstance(event.actor, str)
            or not isinstance(event.kind, str)
            or not isinstance(event.payload, dict)
        ):
            raise IntegrityError("event_shape", f"line {n}: field of wrong type")
        if event.seq != n:
            raise IntegrityError("event_order", f"line {n}: seq {event.seq}, expected {n}")
        events.append(event)
    return events
