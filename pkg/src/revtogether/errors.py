"""Exception types shared across the package."""

from __future__ import annotations


class RevTogetherError(Exception):
    """Base class for all errors raised by this package."""


class VersionMismatchError(RevTogetherError):
    """An edit was built against a document version that has moved on."""

    def __init__(self, expected: int, current: int):
        super().__init__(f"edit targets version {expected} but document is at {current}")
        self.expected = expected
        self.current = current


class OutOfBoundsError(RevTogetherError):
    """Offsets fall outside the document text."""


class InvalidSelectionError(RevTogetherError):
    """A selection is empty, out of bounds, or otherwise unusable."""


class NotFoundError(RevTogetherError):
    """A referenced entity does not exist."""

    def __init__(self, kind: str, item_id: str):
        super().__init__(f"{kind} not found: {item_id}")
        self.kind = kind
        self.item_id = item_id


class IllegalTransitionError(RevTogetherError):
    """The operation is not legal in the entity's current state."""


class StaleProposalError(RevTogetherError):
    """A revision proposal's highlighted span no longer exists in the text."""


class GatewayError(RevTogetherError):
    """Base class for language-model gateway failures."""


class ProviderUnreachableError(GatewayError):
    """The remote provider could not be reached."""


class ProviderTimeoutError(GatewayError):
    """The remote provider did not answer within the configured timeout."""


class SchemaViolationExhaustedError(GatewayError):
    """Every attempt produced output that failed schema validation."""

    def __init__(self, message: str, last_raw: str, attempts: int):
        super().__init__(message)
        self.last_raw = last_raw
        self.attempts = attempts


class NoApplicablePassageError(GatewayError):
    """Every passage the provider suggested was absent from the story."""


class UnboundPlaceholderError(RevTogetherError):
    """A prompt template was rendered without all required placeholders."""

    def __init__(self, template_id: str, missing: list[str]):
        super().__init__(
            f"template {template_id!r} missing bindings: {', '.join(sorted(missing))}"
        )
        self.template_id = template_id
        self.missing = sorted(missing)


class ConfigError(RevTogetherError):
    """Invalid or incomplete configuration."""


class IntegrityError(RevTogetherError):
    """Stored or replayed session data failed a consistency check."""

    def __init__(self, check: str, message: str = ""):
        super().__init__(f"integrity check failed [{check}]" + (f": {message}" if message else ""))
        self.check = check


class FormatVersionError(RevTogetherError):
    """Stored data uses a format version this build does not support."""

    def __init__(self, found: object, supported: int):
        super().__init__(f"format_version {found!r} not supported (max {supported})")
        self.found = found
        self.supported = supported


class SessionLockError(RevTogetherError):
    """Another live process holds the write lock for this session."""


def error_code(exc: Exception) -> str:
    """Stable wire code for an exception, per the API error table."""
    if isinstance(exc, VersionMismatchError):
        return "version_mismatch"
    if isinstance(exc, NotFoundError):
        return "not_found"
    if isinstance(exc, IllegalTransitionError):
        return "illegal_transition"
    if isinstance(exc, StaleProposalError):
        return "stale_proposal"
    if isinstance(exc, (InvalidSelectionError, OutOfBoundsError)):
        return "invalid_selection"
    if isinstance(exc, GatewayError):
        return "gateway_failure"
    return "integrity"
