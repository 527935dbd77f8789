"""Domain errors.

Every error carries a stable machine-readable ``code`` (the class name) so
the HTTP layer can map engine failures to responses without string matching.
"""

from __future__ import annotations


class MargeError(Exception):
    """Base class for all domain errors."""

    #: HTTP status the API layer uses for this error.
    http_status = 400

    @property
    def code(self) -> str:
        return type(self).__name__


# --- beacon protocol ---------------------------------------------------------

class MalformedFrame(MargeError):
    """Byte payload is not a valid beacon advertisement."""


class InvalidFrame(MargeError):
    """Frame fields violate their invariants (bad UUID length, power range...)."""


class InvalidExponent(MargeError):
    """Path-loss exponent must be positive."""


# --- proximity engine --------------------------------------------------------

class InvalidScanEvent(MargeError):
    """Scan event fields out of range."""


class OutOfOrderEvent(MargeError):
    """Timestamp regressed within a scan stream; the log is corrupted."""


class UnknownBeacon(MargeError):
    """Beacon was never observed in this stream."""

    http_status = 404


class EmptyWindow(MargeError):
    """Analysis window has non-positive duration."""


# --- simulator ---------------------------------------------------------------

class InvalidConfig(MargeError):
    """Simulation configuration violates its invariants."""


# --- catalog / adventure engine ----------------------------------------------

class CatalogValidationError(MargeError):
    """Catalog document failed validation; ``issues`` lists (path, message)."""

    def __init__(self, issues: list[tuple[str, str]]):
        self.issues = issues
        lines = "; ".join(f"{path}: {msg}" for path, msg in issues)
        super().__init__(f"invalid catalog: {lines}")


class UnknownLanguage(MargeError):
    """Requested language is not one of the configured codes."""


class UnknownAdventure(MargeError):
    http_status = 404


class UnavailableAdventure(MargeError):
    http_status = 409


class UnknownUser(MargeError):
    http_status = 404


class UnknownSession(MargeError):
    http_status = 404


class SessionComplete(MargeError):
    http_status = 409


class GateLocked(MargeError):
    """Gate beacon is not in range; the stage stays locked."""

    http_status = 409


class WrongInputKind(MargeError):
    """Stage input does not match the current stage variant."""


class IncompleteQuiz(MargeError):
    """Quiz stage cannot be advanced until every question is answered."""

    http_status = 409


class NotAQuizStage(MargeError):
    http_status = 409


class AlreadyAnswered(MargeError):
    http_status = 409


class IndexOutOfRange(MargeError):
    pass


class UnknownEgg(MargeError):
    http_status = 404


class EmptyFeedback(MargeError):
    pass


class TooLong(MargeError):
    pass


# --- data store / auth -------------------------------------------------------

class NotFound(MargeError):
    http_status = 404


class InvalidPath(MargeError):
    pass


class TransformFailed(MargeError):
    """Atomic update's transform signalled failure; nothing was committed."""


class DuplicateLogin(MargeError):
    http_status = 409


class InvalidCredentials(MargeError):
    http_status = 401


class Unauthorized(MargeError):
    http_status = 401


class Forbidden(MargeError):
    http_status = 403


# --- evaluation kit ----------------------------------------------------------

class InvalidResponse(MargeError):
    """Questionnaire response has the wrong shape or out-of-range items."""


class OutOfRange(MargeError):
    """Score outside [0, 100]."""


class EmptyInput(MargeError):
    pass


def all_error_classes() -> list[type[MargeError]]:
    """Every concrete domain error, for exhaustive mapping checks."""
    out: list[type[MargeError]] = []
    stack = [MargeError]
    while stack:
        cls = stack.pop()
        for sub in cls.__subclasses__():
            out.append(sub)
            stack.append(sub)
    return sorted(out, key=lambda c: c.__name__)
