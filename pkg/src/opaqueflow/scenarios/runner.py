"""Execute a parsed scenario against a fresh runtime."""

import logging
from typing import Any, Optional

from opaqueflow.errors import (
    ContextEscapedError,
    OpaqueFlowError,
    QmPanickedError,
    ScenarioError,
    UndeclaredLabelError,
    UnknownQmError,
)
from opaqueflow.models import (
    AttemptStatus,
    CallQm,
    ExpectationResult,
    Exfiltrate,
    ExpectBlocked,
    ExpectDelivered,
    ExpectDenied,
    ExpectUntrustedRead,
    NetworkPost,
    OpaqueHandle,
    RegisterField,
    Scenario,
    ScenarioArg,
    ScenarioResult,
    SetValue,
    SmsSend,
    Step,
)
from opaqueflow.policy.manifest import load_manifest
from opaqueflow.runtime import FlowRuntime
from opaqueflow.sandbox import SandboxContext, declassify_in_sandbox
from opaqueflow.scenarios.library import register_builtin_qms
from opaqueflow.transports import Transport

logger = logging.getLogger(__name__)

# Registered only in scenario runtimes; stands in for a library that keeps
# a reference to the context it was handed.
CAPTURE_QM = "QM_captureContext"


class ScenarioRunner:
    """
    Runs one scenario.

    Each run builds its own FlowRuntime from the scenario's manifest, with
    the built-in QMs registered and a RecordingTransport unless another
    transport is given.
    """

    def __init__(self, scenario: Scenario, transport: Optional[Transport] = None, handle_bytes: int = 16):
        self.scenario = scenario
        manifest = load_manifest(scenario.manifest_path)
        self.runtime = FlowRuntime(manifest, transport=transport, handle_bytes=handle_bytes)
        register_builtin_qms(self.runtime.registry)
        self.runtime.register_qm(CAPTURE_QM, self._capture)

        self._variables: dict[str, OpaqueHandle] = {}
        self._captured: list[SandboxContext] = []
        self._result = ScenarioResult(name=scenario.name)

    def run(self) -> ScenarioResult:
        """
        Execute every step in order.

        Runtime failures (denied flows, unknown handles, transport errors)
        are recorded on the result and execution continues; problems with
        the scenario itself raise ScenarioError.
        """
        logger.info("running scenario %s", self.scenario.name)
        for step in self.scenario.steps:
            try:
                self._execute(step)
            except ScenarioError:
                raise
            except OpaqueFlowError as e:
                self._result.errors.append(f"line {step.line}: {e}")
                logger.info("line %d: %s", step.line, e)
        self._sync_counts()
        return self._result

    # ─────────────────────────────────────────────────────────────
    # Steps
    # ─────────────────────────────────────────────────────────────

    def _execute(self, step: Step) -> None:
        store = self.runtime.store

        if isinstance(step, RegisterField):
            label = self.runtime.manifest.label(step.label_name)
            if label is None:
                raise ScenarioError(f"label {step.label_name} is not declared in the manifest", step.line)
            try:
                store.register_field(step.field_id, label)
            except UndeclaredLabelError as e:
                raise ScenarioError(str(e), step.line) from e

        elif isinstance(step, SetValue):
            store.set_value(step.field_id, step.value)

        elif isinstance(step, CallQm):
            handle = self._call(step.qm, self._values(step.args), step.line)
            if handle is not None and step.bind_as:
                self._variables[step.bind_as] = handle

        elif isinstance(step, NetworkPost):
            self._call("QM_networkPost", [step.url, *self._values(step.args)], step.line)

        elif isinstance(step, SmsSend):
            self._call("QM_smsSend", [step.number, *self._values(step.args)], step.line)

        elif isinstance(step, Exfiltrate):
            self._exfiltrate(step)

        else:
            self._result.expectations.append(self._expect(step))

    def _values(self, args: list[ScenarioArg]) -> list[Any]:
        values: list[Any] = []
        for arg in args:
            if arg.is_handle:
                if arg.var not in self._variables:
                    raise OpaqueFlowError(f"${arg.var} is not bound (its QM call failed)")
                values.append(self._variables[arg.var])
            else:
                values.append(arg.value)
        return values

    def _call(self, qm: str, args: list[Any], line: int) -> Optional[OpaqueHandle]:
        try:
            return self.runtime.qm_call(qm, args)
        except UnknownQmError as e:
            raise ScenarioError(str(e), line) from e
        except QmPanickedError as e:
            if e.violation is not None:
                logger.info("line %d: %s", line, e.violation)
                return None
            raise

    def _capture(self, ctx: SandboxContext) -> None:
        self._captured.append(ctx)

    def _escaped_context(self) -> SandboxContext:
        """A context captured during an earlier QM call, dead since it returned."""
        if not self._captured:
            self.runtime.qm_call(CAPTURE_QM)
        return self._captured[-1]

    def _exfiltrate(self, step: Exfiltrate) -> None:
        ctx = self._escaped_context()
        values = self._values(step.args)
        leaked: list[str] = []

        for value in values:
            if isinstance(value, OpaqueHandle):
                try:
                    declassify_in_sandbox(ctx, value)
                    leaked.append(f"declassified {value.handle_id}")
                except ContextEscapedError:
                    pass
        try:
            self.runtime.trusted_api.network_post(ctx, values, step.url)
            leaked.append(f"posted to {step.url}")
        except ContextEscapedError:
            pass

        if leaked:
            self._result.errors.append(f"line {step.line}: escaped context was not refused: {', '.join(leaked)}")
        else:
            self._result.blocked += 1
            logger.info("line %d: exfiltration through escaped context blocked", step.line)

    # ─────────────────────────────────────────────────────────────
    # Expectations
    # ─────────────────────────────────────────────────────────────

    def _sync_counts(self) -> None:
        attempts = self.runtime.attempt_log()
        self._result.attempts = attempts
        self._result.delivered = sum(1 for a in attempts if a.delivered)
        self._result.denied = sum(1 for a in attempts if a.status == AttemptStatus.DENIED)

    def _expect(self, step: Step) -> ExpectationResult:
        self._sync_counts()
        result = self._result

        if isinstance(step, ExpectUntrustedRead):
            actual = self.runtime.store.get_text_untrusted(step.field_id)
            return ExpectationResult(
                line=step.line,
                description=f"untrusted read of {step.field_id} == {step.expected!r}",
                passed=actual == step.expected,
                detail=f"got {actual!r}",
            )

        counted = {
            ExpectDelivered: ("delivered", result.delivered),
            ExpectDenied: ("denied", result.denied),
            ExpectBlocked: ("blocked", result.blocked),
        }
        what, actual_count = counted[type(step)]
        return ExpectationResult(
            line=step.line,
            description=f"{what} == {step.count}",
            passed=actual_count == step.count,
            detail=f"got {actual_count}",
        )


def run_scenario(
    scenario: Scenario, transport: Optional[Transport] = None, handle_bytes: int = 16
) -> ScenarioResult:
    return ScenarioRunner(scenario, transport=transport, handle_bytes=handle_bytes).run()
