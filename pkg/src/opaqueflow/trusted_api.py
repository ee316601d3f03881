"""The sink gateway: the only path from a QM to NETWORK and SMS."""

from __future__ import annotations

import logging
import threading
from collections.abc import Iterable
from typing import TYPE_CHECKING, Any, Optional

from opaqueflow.errors import InvalidArgumentError, PolicyViolationError
from opaqueflow.models import (
    AttemptStatus,
    Handle,
    Manifest,
    NormalizedUrl,
    SinkAttempt,
    SinkKind,
    SinkRequest,
    encode_payload,
)
from opaqueflow.policy.checker import check_flow
from opaqueflow.policy.urls import normalize_url
from opaqueflow.sandbox import StagedDelivery, as_qm_arg
from opaqueflow.transports import RecordingTransport, Transport

if TYPE_CHECKING:
    from opaqueflow.runtime import FlowRuntime
    from opaqueflow.sandbox import SandboxContext

logger = logging.getLogger(__name__)


class TrustedApi:
    """
    Policy-checked access to sinks.

    Every attempt is checked against the manifest with the caller's
    accumulated taints and recorded in the attempt log. Denied attempts
    raise PolicyViolationError. Allowed ones are staged on the calling
    context and handed to the transport when the QM returns normally.
    """

    def __init__(self, manifest: Manifest, transport: Optional[Transport] = None):
        self._manifest = manifest
        self._transport: Transport = transport if transport is not None else RecordingTransport()
        self._attempts: list[SinkAttempt] = []
        self._lock = threading.RLock()

    @property
    def manifest(self) -> Manifest:
        return self._manifest

    @property
    def transport(self) -> Transport:
        with self._lock:
            return self._transport

    def set_transport(self, transport: Transport) -> None:
        with self._lock:
            self._transport = transport
        logger.debug("transport set to %s", transport.name)

    def attempt_log(self) -> list[SinkAttempt]:
        """Chronological snapshot of every attempt so far."""
        with self._lock:
            return [attempt.model_copy() for attempt in self._attempts]

    def lookup(self, attempt_id: int) -> Optional[SinkAttempt]:
        with self._lock:
            if isinstance(attempt_id, int) and 1 <= attempt_id <= len(self._attempts):
                return self._attempts[attempt_id - 1].model_copy()
        return None

    def export_log(self) -> str:
        """One `ALLOW|DENY <SINK> <destination> taints=<labels>` line per attempt."""
        return "\n".join(attempt.export_line() for attempt in self.attempt_log())

    # ─────────────────────────────────────────────────────────────
    # Sinks
    # ─────────────────────────────────────────────────────────────

    def network_post(self, ctx: "SandboxContext", payload: Iterable[Any], url: str) -> SinkAttempt:
        """
        POST payload to url on behalf of the running QM.

        Raises:
            ContextEscapedError: ctx is not live
            UrlError: url does not normalize
            PolicyViolationError: some taint is not allowed to reach url
        """
        ctx.ensure_live("network post")
        normalized = normalize_url(url)
        return self._attempt(ctx, SinkKind.NETWORK, normalized, normalized.render(), payload)

    def sms_send(self, ctx: "SandboxContext", payload: Iterable[Any], number: str) -> SinkAttempt:
        """Send payload by SMS; allowed only if every taint has an SMS rule."""
        ctx.ensure_live("sms send")
        number = number.strip()
        if not number:
            raise InvalidArgumentError("SMS number must be non-empty")
        return self._attempt(ctx, SinkKind.SMS, None, number, payload)

    def _attempt(
        self,
        ctx: "SandboxContext",
        sink: SinkKind,
        url: Optional[NormalizedUrl],
        destination: str,
        payload: Iterable[Any],
    ) -> SinkAttempt:
        args = [as_qm_arg(item) for item in payload]
        table = ctx.runtime.handles

        taints = ctx.flow_taints
        for arg in args:
            if isinstance(arg, Handle):
                taints = taints.union(table.taints_of(arg.handle))

        decision = check_flow(self._manifest, SinkRequest(sink=sink, url=url, taints=taints))

        with self._lock:
            attempt = SinkAttempt(
                attempt_id=len(self._attempts) + 1,
                sink=sink,
                destination=destination,
                taints=taints,
                decision=decision,
                status=AttemptStatus.STAGED if decision.allowed else AttemptStatus.DENIED,
            )
            self._attempts.append(attempt)

        if not decision.allowed:
            logger.warning(
                "DENY %s %s taints=%s", sink.value, destination, taints.render()
            )
            raise PolicyViolationError(decision, attempt.model_copy())

        # Declassify only after the flow has been allowed
        values = [ctx.declassify(arg.handle) if isinstance(arg, Handle) else arg.value for arg in args]
        ctx.stage(StagedDelivery(attempt, sink, destination, encode_payload(values)))
        logger.debug("ALLOW %s %s taints=%s (staged)", sink.value, destination, taints.render())
        return attempt.model_copy()

    # ─────────────────────────────────────────────────────────────
    # Outbox handling (called by qm_call)
    # ─────────────────────────────────────────────────────────────

    def commit(self, staged: list[StagedDelivery]) -> None:
        """Hand staged deliveries of a completed QM to the transport."""
        for item in staged:
            attempt = item.attempt
            try:
                result = self.transport.deliver(item.sink, item.destination, item.payload)
            except Exception as e:
                self._fail(attempt, f"{type(e).__name__}: {e}")
                continue
            if result.ok:
                with self._lock:
                    attempt.delivered = True
                    attempt.status = AttemptStatus.DELIVERED
            else:
                self._fail(attempt, f"TransportError: {result.detail or 'delivery rejected'}")

    def discard(self, staged: list[StagedDelivery]) -> None:
        """Drop staged deliveries of a QM that raised."""
        with self._lock:
            for item in staged:
                item.attempt.status = AttemptStatus.DISCARDED

    def _fail(self, attempt: SinkAttempt, error: str) -> None:
        logger.warning(
            "delivery of attempt %d to %s failed: %s", attempt.attempt_id, attempt.destination, error
        )
        with self._lock:
            attempt.status = AttemptStatus.FAILED
            attempt.error = error


def network_post(ctx: "SandboxContext", payload: Iterable[Any], url: str) -> SinkAttempt:
    return ctx.runtime.trusted_api.network_post(ctx, payload, url)


def sms_send(ctx: "SandboxContext", payload: Iterable[Any], number: str) -> SinkAttempt:
    return ctx.runtime.trusted_api.sms_send(ctx, payload, number)


def set_transport(runtime: "FlowRuntime", transport: Transport) -> None:
    runtime.trusted_api.set_transport(transport)


def attempt_log(runtime: "FlowRuntime") -> list[SinkAttempt]:
    return runtime.trusted_api.attempt_log()
