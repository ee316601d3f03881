"""Exception hierarchy for opaqueflow."""

from __future__ import annotations

from typing import TYPE_CHECKING, Optional

if TYPE_CHECKING:
    from opaqueflow.models import Decision, SinkAttempt


class OpaqueFlowError(Exception):
    """Base class for every error raised by opaqueflow."""


class InvalidArgumentError(OpaqueFlowError, ValueError):
    """An argument has the wrong shape (empty number, unserializable value)."""


# ─────────────────────────────────────────────────────────────────────────────
# Labels and handles
# ─────────────────────────────────────────────────────────────────────────────


class HandleUnknownError(OpaqueFlowError):
    """The handle is stale, forged, or belongs to another runtime."""

    def __init__(self, handle_id: str):
        super().__init__(f"unknown opaque handle: {handle_id}")
        self.handle_id = handle_id


# ─────────────────────────────────────────────────────────────────────────────
# Policy
# ─────────────────────────────────────────────────────────────────────────────


class ManifestError(OpaqueFlowError):
    """Syntax or validation error in a manifest, with 1-based position."""

    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.message = message
        self.line = line
        self.column = column
        where = f"line {line}, column {column}: " if line else ""
        super().__init__(f"{where}{message}")


class UrlError(OpaqueFlowError, ValueError):
    """A URL failed normalization."""


class UnsupportedSchemeError(UrlError):
    pass


class EmptyHostError(UrlError):
    pass


class InvalidHostError(UrlError):
    pass


class MalformedPortError(UrlError):
    pass


class UserInfoRejectedError(UrlError):
    pass


# ─────────────────────────────────────────────────────────────────────────────
# Sandbox
# ─────────────────────────────────────────────────────────────────────────────


class DuplicateQmError(OpaqueFlowError):
    def __init__(self, name: str):
        super().__init__(f"quarantine module already registered: {name}")
        self.name = name


class UnknownQmError(OpaqueFlowError):
    def __init__(self, name: str):
        super().__init__(f"unknown quarantine module: {name}")
        self.name = name


class QmPanickedError(OpaqueFlowError):
    """
    The QM function raised.

    Only the exception type crosses the sandbox boundary. A denial recorded
    by the trusted API is carried as `violation`.
    """

    def __init__(self, name: str, error_type: str, violation: Optional["PolicyViolationError"] = None):
        super().__init__(f"quarantine module {name} failed: {error_type}")
        self.name = name
        self.error_type = error_type
        self.violation = violation


class ContextEscapedError(OpaqueFlowError):
    """A sandbox context was used outside the dynamic extent of its QM call."""

    def __init__(self, sandbox_id: Optional[str], operation: str):
        who = sandbox_id or "<none>"
        super().__init__(f"{operation} refused: sandbox context {who} is not live")
        self.sandbox_id = sandbox_id
        self.operation = operation


# ─────────────────────────────────────────────────────────────────────────────
# Sensitive store
# ─────────────────────────────────────────────────────────────────────────────


class DuplicateFieldError(OpaqueFlowError):
    def __init__(self, field_id: str):
        super().__init__(f"sensitive field already registered: {field_id}")
        self.field_id = field_id


class UnknownFieldError(OpaqueFlowError):
    def __init__(self, field_id: str):
        super().__init__(f"unknown sensitive field: {field_id}")
        self.field_id = field_id


class UndeclaredLabelError(OpaqueFlowError):
    def __init__(self, label: str):
        super().__init__(f"taint label not declared in manifest: {label}")
        self.label = label


# ─────────────────────────────────────────────────────────────────────────────
# Trusted API
# ─────────────────────────────────────────────────────────────────────────────


class PolicyViolationError(OpaqueFlowError):
    """A sink request was denied by the flow policy."""

    def __init__(self, decision: "Decision", attempt: "SinkAttempt"):
        denied = ", ".join(
            f"{v.label} ({v.reason.value})" for v in decision.denied_verdicts()
        )
        super().__init__(
            f"flow to {attempt.sink.value} {attempt.destination} denied: {denied}"
        )
        self.decision = decision
        self.attempt = attempt


class TransportError(OpaqueFlowError):
    """The transport could not deliver an allowed payload."""


# ─────────────────────────────────────────────────────────────────────────────
# Scenarios
# ─────────────────────────────────────────────────────────────────────────────


class ScenarioError(OpaqueFlowError):
    def __init__(self, message: str, line: int = 0):
        self.message = message
        self.line = line
        where = f"line {line}: " if line else ""
        super().__init__(f"{where}{message}")
