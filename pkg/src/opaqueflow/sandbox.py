"""Quarantine Modules and the sandbox contexts they run in."""

from __future__ import annotations

import logging
import secrets
import threading
from collections.abc import Callable, Iterable
from contextvars import ContextVar
from typing import TYPE_CHECKING, Any, NamedTuple, Optional

from pydantic import ValidationError

from opaqueflow.errors import (
    ContextEscapedError,
    DuplicateQmError,
    InvalidArgumentError,
    PolicyViolationError,
    QmPanickedError,
    UnknownQmError,
)
from opaqueflow.models import (
    Handle,
    OpaqueHandle,
    Plain,
    SinkAttempt,
    SinkKind,
    TaintSet,
    decode_payload,
    encode_payload,
)

if TYPE_CHECKING:
    from opaqueflow.runtime import FlowRuntime

logger = logging.getLogger(__name__)

QmFunction = Callable[..., Any]

# Innermost QM context of the current thread / task.
_current_context: ContextVar[Optional["SandboxContext"]] = ContextVar(
    "opaqueflow_sandbox_context", default=None
)


class QmRegistry:
    """Append-only map from QM name to function."""

    def __init__(self) -> None:
        self._entries: dict[str, QmFunction] = {}
        self._lock = threading.Lock()

    def register(self, name: str, fn: QmFunction) -> None:
        if not name:
            raise InvalidArgumentError("QM name must be non-empty")
        with self._lock:
            if name in self._entries:
                raise DuplicateQmError(name)
            self._entries[name] = fn
        logger.debug("registered QM %s", name)

    def quarantine_module(self, name: Optional[str] = None) -> Callable[[QmFunction], QmFunction]:
        """Decorator form of register; defaults to the function's name."""

        def decorator(fn: QmFunction) -> QmFunction:
            self.register(name or fn.__name__, fn)
            return fn

        return decorator

    def get(self, name: str) -> QmFunction:
        # dict reads are atomic; registration never removes entries
        fn = self._entries.get(name)
        if fn is None:
            raise UnknownQmError(name)
        return fn

    def names(self) -> list[str]:
        with self._lock:
            return list(self._entries)

    def __contains__(self, name: object) -> bool:
        return name in self._entries

    def __len__(self) -> int:
        return len(self._entries)


def register_qm(registry: QmRegistry, name: str, fn: QmFunction) -> None:
    registry.register(name, fn)


class StagedDelivery(NamedTuple):
    """An allowed delivery waiting for its QM to return, fixed at check time."""

    attempt: SinkAttempt
    sink: SinkKind
    destination: str
    payload: bytes


class SandboxContext:
    """
    Capability handed to a QM for the duration of one qm_call.

    It accumulates the taints the computation acquires and gates access
    to declassification, sensitive reads and sinks. Once the call returns
    (or from any other thread or call frame) it refuses every operation.
    """

    def __init__(self, runtime: "FlowRuntime", seed: TaintSet, parent: Optional["SandboxContext"] = None):
        self.sandbox_id = secrets.token_hex(8)
        self._runtime = runtime
        self._parent = parent
        self._taints = seed
        self._open = True
        self._outbox: list[StagedDelivery] = []
        self._lock = threading.Lock()

    @property
    def runtime(self) -> "FlowRuntime":
        return self._runtime

    @property
    def acquired_taints(self) -> TaintSet:
        return self._taints

    @property
    def parent(self) -> Optional["SandboxContext"]:
        return self._parent

    @property
    def flow_taints(self) -> TaintSet:
        """Acquired taints joined with those of every enclosing QM still running."""
        taints = self.acquired_taints
        ancestor = self._parent
        while ancestor is not None:
            if ancestor._open:
                taints = taints.union(ancestor.acquired_taints)
            ancestor = ancestor._parent
        return taints

    @property
    def live(self) -> bool:
        return self._open and _current_context.get() is self

    def ensure_live(self, operation: str) -> None:
        if not self.live:
            logger.warning("refused %s on escaped sandbox context %s", operation, self.sandbox_id)
            raise ContextEscapedError(self.sandbox_id, operation)

    def acquire(self, taints: TaintSet) -> None:
        """Grow the acquired taint set (never shrinks)."""
        with self._lock:
            self._taints = self._taints.union(taints)

    def stage(self, delivery: StagedDelivery) -> None:
        self.ensure_live("stage delivery")
        with self._lock:
            self._outbox.append(delivery)

    def adopt(self, staged: list[StagedDelivery]) -> None:
        """Take over the outbox of a nested call that returned normally."""
        with self._lock:
            self._outbox.extend(staged)

    def close(self) -> list[StagedDelivery]:
        """End the context's life and hand back its outbox."""
        with self._lock:
            self._open = False
            staged, self._outbox = self._outbox, []
        return staged

    # Trusted API surface, as seen from inside a QM

    def declassify(self, handle: OpaqueHandle) -> Any:
        return declassify_in_sandbox(self, handle)

    def get_text(self, field_id: str) -> str:
        return self._runtime.store.trusted_get_text(self, field_id)

    def network_post(self, payload: Iterable[Any], url: str) -> SinkAttempt:
        return self._runtime.trusted_api.network_post(self, payload, url)

    def sms_send(self, payload: Iterable[Any], number: str) -> SinkAttempt:
        return self._runtime.trusted_api.sms_send(self, payload, number)

    def call(self, name: str, args: Iterable[Any] = ()) -> OpaqueHandle:
        """Nested QM call; the result contributes taints only once declassified."""
        self.ensure_live("qm_call")
        return qm_call(self._runtime, name, args)

    def __repr__(self) -> str:
        state = "live" if self.live else "closed"
        return f"SandboxContext({self.sandbox_id}, {state}, taints={self._taints})"


def current_context() -> Optional[SandboxContext]:
    return _current_context.get()


def as_qm_arg(value: Any) -> Plain | Handle:
    """Wrap a raw argument: handles become Handle args, anything else Plain."""
    if isinstance(value, (Plain, Handle)):
        return value
    if isinstance(value, OpaqueHandle):
        return Handle(handle=value)
    try:
        return Plain(value=value)
    except ValidationError as e:
        raise InvalidArgumentError(f"QM argument is not serializable: {value!r}") from e


def declassify_in_sandbox(ctx: SandboxContext, handle: OpaqueHandle) -> Any:
    """
    Read a handle's payload from inside a live sandbox.

    The handle's taints join the context's acquired taints.

    Raises:
        ContextEscapedError: ctx is not the live context of the running QM
        HandleUnknownError: stale, forged or foreign handle
    """
    ctx.ensure_live("declassify")
    table = ctx.runtime.handles
    taints = table.taints_of(handle)
    payload = table._payload_of(handle)
    ctx.acquire(taints)
    return decode_payload(payload)


def qm_call(runtime: "FlowRuntime", name: str, args: Iterable[Any] = ()) -> OpaqueHandle:
    """
    Run a registered QM inside a fresh sandbox context.

    Handle arguments are declassified for the QM and seed its taints. The
    return value is serialized into a new opaque handle tainted with
    everything the context acquired. Staged sink deliveries reach the
    transport only if the QM returns normally; a nested call hands them to
    the enclosing context instead, so they wait for the outermost QM.

    A failing QM surfaces as QmPanickedError naming only the exception
    type. Nothing it raised leaves the sandbox except a policy denial the
    trusted API itself recorded.

    Raises:
        UnknownQmError, HandleUnknownError, InvalidArgumentError,
        QmPanickedError (the QM raised; no handle, no deliveries)
    """
    fn = runtime.registry.get(name)
    table = runtime.handles

    seed = TaintSet()
    values: list[Any] = []
    for arg in (as_qm_arg(a) for a in args):
        if isinstance(arg, Handle):
            seed = seed.union(table.taints_of(arg.handle))
            values.append(decode_payload(table._payload_of(arg.handle)))
        else:
            values.append(decode_payload(encode_payload(arg.value)))

    parent = _current_context.get()
    if parent is not None and parent.runtime is not runtime:
        parent = None
    ctx = SandboxContext(runtime, seed, parent)
    token = _current_context.set(ctx)
    failure: Optional[BaseException] = None
    try:
        payload = encode_payload(fn(ctx, *values))
    except BaseException as e:
        failure = e
    finally:
        _current_context.reset(token)
        staged = ctx.close()

    if failure is not None:
        runtime.trusted_api.discard(staged)
        if parent is not None:
            parent.acquire(ctx.acquired_taints)
        error_type = type(failure).__name__
        violation = _recorded_violation(runtime, failure)
        interrupted = isinstance(failure, KeyboardInterrupt)
        del failure
        logger.warning("QM %s raised %s; result and staged deliveries dropped", name, error_type)
        if interrupted:
            raise KeyboardInterrupt
        raise QmPanickedError(name, error_type, violation)

    if parent is not None:
        parent.adopt(staged)
    else:
        runtime.trusted_api.commit(staged)
    handle = table.mint(ctx.acquired_taints, payload)
    logger.debug("QM %s -> %s", name, handle)
    return handle


def _recorded_violation(runtime: "FlowRuntime", failure: BaseException) -> Optional[PolicyViolationError]:
    """A fresh copy of the denial behind failure, if the attempt log holds it."""
    if isinstance(failure, QmPanickedError):
        failure = failure.violation
    if not isinstance(failure, PolicyViolationError):
        return None
    attempt = failure.attempt
    if not isinstance(attempt, SinkAttempt):
        return None
    logged = runtime.trusted_api.lookup(attempt.attempt_id)
    if logged is None or logged.decision.allowed or logged != attempt:
        return None
    return PolicyViolationError(logged.decision, logged)
