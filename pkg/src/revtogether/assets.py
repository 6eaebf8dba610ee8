"""Helpers for files shipped inside the package (prompts, personas, avatars)."""

from __future__ import annotations

from importlib import resources

from .errors import ConfigError


def asset_root():
    """Traversable root of the packaged asset tree."""
    return resources.files("revtogether").joinpath("assets")


def parse_front_matter(text: str) -> tuple[dict[str, str], str]:
    """Split a ``key: value`` header from its body at the first ``---`` line."""
    meta: dict[str, str] = {}
    lines = text.split("\n")
    for i, line in enumerate(lines):
        if line.strip() == "---":
            return meta, "\n".join(lines[i + 1 :])
        if not line.strip():
            continue
        key, sep, value = line.partition(":")
        if not sep:
            raise ConfigError(f"front matter line has no colon: {line!r}")
        meta[key.strip()] = value.strip()
    raise ConfigError("front matter never closed with ---")
