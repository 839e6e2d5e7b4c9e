"""Error hierarchy shared by the engine, backends, service and CLI.

Each error carries a stable ``code`` that the HTTP layer maps onto a
status; anything outside this hierarchy surfaces as an internal error.
"""

from __future__ import annotations


class FabulaError(Exception):
    code = "internal"


class InvalidArgument(FabulaError, ValueError):
    code = "invalid_argument"


class InvalidState(FabulaError):
    code = "invalid_state"


class NotFound(FabulaError):
    code = "not_found"


class Conflict(FabulaError):
    code = "conflict"


class UnsupportedVersion(FabulaError):
    code = "unsupported_version"


class BackendUnavailable(FabulaError):
    code = "backend_unavailable"


class BackendError(FabulaError):
    code = "backend_error"

    def __init__(self, message: str, status: int | None = None):
        super().__init__(message)
        self.status = status


class EmptyGeneration(BackendError):
    """The text backend returned a blank completion."""


class PartialBatch(BackendError):
    """An image batch came back incomplete; carries what succeeded."""

    def __init__(self, message: str, images: list):
        super().__init__(message)
        self.images = images


class AbortedRun(BackendError):
    """Too many corpus items failed for the comparison to be meaningful."""

    def __init__(self, message: str, skipped: int, total: int):
        super().__init__(message)
        self.skipped = skipped
        self.total = total


class SessionParseError(FabulaError):
    """A stored session file is not valid JSON; carries the byte offset."""

    code = "invalid_argument"

    def __init__(self, message: str, offset: int):
        super().__init__(message)
        self.offset = offset
