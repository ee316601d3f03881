"""Pydantic models for opaqueflow."""

import json
import re
from enum import Enum
from pathlib import Path
from typing import Annotated, Any, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

_SEGMENT = r"[A-Za-z_][A-Za-z0-9_]*"
APP_ID_PATTERN = re.compile(rf"{_SEGMENT}(?:\.{_SEGMENT})+")
NAME_PATTERN = re.compile(_SEGMENT)


# ─────────────────────────────────────────────────────────────────────────────
# Canonical payload codec
# ─────────────────────────────────────────────────────────────────────────────


def encode_payload(value: Any) -> bytes:
    """Serialize a value to the canonical UTF-8 JSON byte string."""
    return json.dumps(
        value, sort_keys=True, separators=(",", ":"), ensure_ascii=False, allow_nan=False
    ).encode("utf-8")


def decode_payload(payload: bytes) -> Any:
    """Inverse of encode_payload."""
    return json.loads(payload.decode("utf-8"))


# ─────────────────────────────────────────────────────────────────────────────
# Labels and handles
# ─────────────────────────────────────────────────────────────────────────────


class TaintLabel(BaseModel):
    """Identity of a piece of sensitive data, written `appId/name`."""

    model_config = ConfigDict(frozen=True)

    app_id: str = Field(description="Reverse-DNS app identifier, e.g. com.example.smartapp")
    name: str = Field(description="Label name, e.g. Taint_UI")

    @field_validator("app_id")
    @classmethod
    def _check_app_id(cls, value: str) -> str:
        if not APP_ID_PATTERN.fullmatch(value):
            raise ValueError(f"invalid app id: {value!r}")
        return value

    @field_validator("name")
    @classmethod
    def _check_name(cls, value: str) -> str:
        if not NAME_PATTERN.fullmatch(value):
            raise ValueError(f"invalid label name: {value!r}")
        return value

    @classmethod
    def parse(cls, text: str) -> "TaintLabel":
        """Parse the `appId/name` text form."""
        app_id, sep, name = text.strip().rpartition("/")
        if not sep:
            raise ValueError(f"taint label must look like appId/name: {text!r}")
        return cls(app_id=app_id, name=name)

    def __str__(self) -> str:
        return f"{self.app_id}/{self.name}"


class TaintSet(BaseModel):
    """Immutable set of taint labels, combined by union."""

    model_config = ConfigDict(frozen=True)

    labels: frozenset[TaintLabel] = Field(default_factory=frozenset)

    @classmethod
    def of(cls, *labels: TaintLabel) -> "TaintSet":
        return cls(labels=frozenset(labels))

    def union(self, other: "TaintSet") -> "TaintSet":
        if other.labels <= self.labels:
            return self
        if self.labels <= other.labels:
            return other
        return TaintSet(labels=self.labels | other.labels)

    def __or__(self, other: "TaintSet") -> "TaintSet":
        return self.union(other)

    def __contains__(self, label: object) -> bool:
        return label in self.labels

    def __len__(self) -> int:
        return len(self.labels)

    def issubset(self, other: "TaintSet") -> bool:
        return self.labels <= other.labels

    def sorted_labels(self) -> list[TaintLabel]:
        return sorted(self.labels, key=str)

    def render(self) -> str:
        """Comma-joined `appId/name` labels in sorted order."""
        return ",".join(str(label) for label in self.sorted_labels())

    def __str__(self) -> str:
        return "{" + self.render() + "}"


class OpaqueHandle(BaseModel):
    """
    Reference to a QM result.

    The payload is held by the runtime's handle table and never by the
    handle itself; only an in-sandbox declassification yields it.
    """

    model_config = ConfigDict(frozen=True)

    handle_id: str = Field(description="Lowercase hex token, unique per runtime")
    taints: TaintSet = Field(default_factory=TaintSet)

    def __str__(self) -> str:
        return f"handle:{self.handle_id[:8]} {self.taints}"


class Plain(BaseModel):
    """A QM argument passed by value."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["plain"] = "plain"
    value: Any = None

    @field_validator("value")
    @classmethod
    def _check_serializable(cls, value: Any) -> Any:
        try:
            encode_payload(value)
        except (TypeError, ValueError) as e:
            raise ValueError(f"value is not canonically serializable: {e}") from e
        return value


class Handle(BaseModel):
    """A QM argument passed as an opaque handle."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["handle"] = "handle"
    handle: OpaqueHandle


QmArg = Annotated[Union[Plain, Handle], Field(discriminator="kind")]


# ─────────────────────────────────────────────────────────────────────────────
# Policy
# ─────────────────────────────────────────────────────────────────────────────


class SinkKind(str, Enum):
    """Registered sinks."""

    NETWORK = "NETWORK"
    SMS = "SMS"


class DenialReason(str, Enum):
    """Why a label was not covered by any rule."""

    NO_RULE_FOR_SINK = "NoRuleForSink"
    URL_FILTER_MISMATCH = "UrlFilterMismatch"


class NormalizedUrl(BaseModel):
    """A URL in canonical form (see policy.urls.normalize_url)."""

    model_config = ConfigDict(frozen=True)

    scheme: Literal["http", "https"]
    host: str = Field(min_length=1)
    port: int = Field(ge=1, le=65535)
    path: str = "/"
    query: str = ""

    def render(self) -> str:
        text = f"{self.scheme}://{self.host}:{self.port}{self.path}"
        return f"{text}?{self.query}" if self.query else text

    def __str__(self) -> str:
        return self.render()


class UrlFilter(BaseModel):
    """Endpoint filter attached to a NETWORK rule."""

    model_config = ConfigDict(frozen=True)

    scheme: Literal["http", "https"]
    host: str = Field(min_length=1)
    port: int = Field(ge=1, le=65535)
    path_prefix: str = "/"

    @field_validator("path_prefix")
    @classmethod
    def _check_prefix(cls, value: str) -> str:
        if not value.startswith("/"):
            raise ValueError("path prefix must begin with '/'")
        if any(segment in (".", "..") for segment in value.split("/")):
            raise ValueError("path prefix must not contain dot segments")
        return value

    def render(self) -> str:
        return f"{self.scheme}://{self.host}:{self.port}{self.path_prefix}"

    def __str__(self) -> str:
        return self.render()


class FlowRule(BaseModel):
    """An allow-rule `label -> SINK [url filter]`."""

    model_config = ConfigDict(frozen=True)

    label: TaintLabel
    sink: SinkKind
    filter: Optional[UrlFilter] = None

    @model_validator(mode="after")
    def _filter_only_on_network(self) -> "FlowRule":
        if self.filter is not None and self.sink != SinkKind.NETWORK:
            raise ValueError(f"URL filter not allowed on {self.sink.value} rules")
        return self

    def render(self) -> str:
        text = f"{self.label} -> {self.sink.value}"
        return f"{text} url {self.filter.render()}" if self.filter else text


class Manifest(BaseModel):
    """Declared labels plus ordered allow-rules of one app."""

    model_config = ConfigDict(frozen=True)

    app_id: str
    declared_labels: tuple[TaintLabel, ...] = ()
    rules: tuple[FlowRule, ...] = ()

    @field_validator("app_id")
    @classmethod
    def _check_app_id(cls, value: str) -> str:
        if not APP_ID_PATTERN.fullmatch(value):
            raise ValueError(f"invalid app id: {value!r}")
        return value

    @model_validator(mode="after")
    def _check_consistency(self) -> "Manifest":
        seen: set[TaintLabel] = set()
        for label in self.declared_labels:
            if label.app_id != self.app_id:
                raise ValueError(f"label {label} does not belong to app {self.app_id}")
            if label in seen:
                raise ValueError(f"duplicate label declaration: {label.name}")
            seen.add(label)
        rules: set[FlowRule] = set()
        for rule in self.rules:
            if rule.label not in seen:
                raise ValueError(f"rule uses undeclared label: {rule.label.name}")
            if rule in rules:
                raise ValueError(f"duplicate rule: {rule.render()}")
            rules.add(rule)
        return self

    def declares(self, label: TaintLabel) -> bool:
        return label in self.declared_labels

    def label(self, name: str) -> Optional[TaintLabel]:
        """Look up a declared label by its short name."""
        for label in self.declared_labels:
            if label.name == name:
                return label
        return None


class SinkRequest(BaseModel):
    """A sink access attempt as seen by the policy checker."""

    model_config = ConfigDict(frozen=True)

    sink: SinkKind
    url: Optional[NormalizedUrl] = None
    taints: TaintSet = Field(default_factory=TaintSet)

    @model_validator(mode="after")
    def _url_iff_network(self) -> "SinkRequest":
        if (self.sink == SinkKind.NETWORK) != (self.url is not None):
            raise ValueError("url is required for NETWORK requests and forbidden otherwise")
        return self


class LabelVerdict(BaseModel):
    """Outcome for one label: the first matching rule, or a denial reason."""

    model_config = ConfigDict(frozen=True)

    label: TaintLabel
    rule: Optional[FlowRule] = None
    reason: Optional[DenialReason] = None

    @model_validator(mode="after")
    def _rule_xor_reason(self) -> "LabelVerdict":
        if (self.rule is None) == (self.reason is None):
            raise ValueError("a verdict carries exactly one of rule or reason")
        return self

    @property
    def matched(self) -> bool:
        return self.rule is not None


class Decision(BaseModel):
    """The policy checker's verdict on a SinkRequest."""

    model_config = ConfigDict(frozen=True)

    allowed: bool
    per_label: tuple[LabelVerdict, ...] = ()

    @model_validator(mode="after")
    def _allowed_iff_all_matched(self) -> "Decision":
        if self.allowed != all(v.matched for v in self.per_label):
            raise ValueError("allowed must hold exactly when every label matched")
        return self

    def verdict_for(self, label: TaintLabel) -> Optional[LabelVerdict]:
        for verdict in self.per_label:
            if verdict.label == label:
                return verdict
        return None

    def denied_verdicts(self) -> list[LabelVerdict]:
        return [v for v in self.per_label if not v.matched]


# ─────────────────────────────────────────────────────────────────────────────
# Sensitive store
# ─────────────────────────────────────────────────────────────────────────────


class SensitiveEntry(BaseModel):
    """A `<id, sensitive_value, taint_label>` triple."""

    model_config = ConfigDict(frozen=True)

    field_id: str = Field(min_length=1)
    value: str = ""
    label: TaintLabel


# ─────────────────────────────────────────────────────────────────────────────
# Trusted API
# ─────────────────────────────────────────────────────────────────────────────


class TransportKind(str, Enum):
    FAKE = "fake"
    HTTP = "http"


class AttemptStatus(str, Enum):
    """Lifecycle of a sink attempt."""

    DENIED = "denied"  # policy refused; nothing staged
    STAGED = "staged"  # allowed, waiting for the QM to return
    DELIVERED = "delivered"  # handed to the transport successfully
    FAILED = "failed"  # allowed but the transport failed
    DISCARDED = "discarded"  # allowed but the QM raised before returning


class DeliveryResult(BaseModel):
    """What a transport reports back for one delivery."""

    ok: bool = True
    detail: str = ""
    status_code: Optional[int] = None


class SinkAttempt(BaseModel):
    """Audit record of one sink access attempt."""

    model_config = ConfigDict(validate_assignment=True)

    attempt_id: int = Field(ge=1, frozen=True)
    sink: SinkKind = Field(frozen=True)
    destination: str = Field(frozen=True)
    taints: TaintSet = Field(default_factory=TaintSet, frozen=True)
    decision: Decision = Field(frozen=True)
    status: AttemptStatus
    delivered: bool = False
    error: Optional[str] = None

    @model_validator(mode="after")
    def _delivered_implies_allowed(self) -> "SinkAttempt":
        if self.delivered and not self.decision.allowed:
            raise ValueError("a denied attempt can never be delivered")
        return self

    def export_line(self) -> str:
        """`ALLOW|DENY <SINK> <destination> taints=<labels>`"""
        verdict = "ALLOW" if self.decision.allowed else "DENY"
        return f"{verdict} {self.sink.value} {self.destination} taints={self.taints.render()}"


# ─────────────────────────────────────────────────────────────────────────────
# Scenarios
# ─────────────────────────────────────────────────────────────────────────────


class ScenarioArg(BaseModel):
    """A step argument: `$var` (handle) or a plain string."""

    var: Optional[str] = None
    value: Optional[str] = None

    @property
    def is_handle(self) -> bool:
        return self.var is not None


class RegisterField(BaseModel):
    kind: Literal["field"] = "field"
    line: int = 0
    field_id: str
    label_name: str


class SetValue(BaseModel):
    kind: Literal["set"] = "set"
    line: int = 0
    field_id: str
    value: str = ""


class CallQm(BaseModel):
    kind: Literal["call"] = "call"
    line: int = 0
    qm: str
    args: list[ScenarioArg] = Field(default_factory=list)
    bind_as: Optional[str] = None


class NetworkPost(BaseModel):
    kind: Literal["post"] = "post"
    line: int = 0
    args: list[ScenarioArg] = Field(default_factory=list)
    url: str


class SmsSend(BaseModel):
    kind: Literal["sms"] = "sms"
    line: int = 0
    args: list[ScenarioArg] = Field(default_factory=list)
    number: str


class Exfiltrate(BaseModel):
    """Injected code replaying a captured context outside any QM."""

    kind: Literal["exfiltrate"] = "exfiltrate"
    line: int = 0
    args: list[ScenarioArg] = Field(default_factory=list)
    url: str


class ExpectDelivered(BaseModel):
    kind: Literal["expect_delivered"] = "expect_delivered"
    line: int = 0
    count: int = Field(ge=0)


class ExpectDenied(BaseModel):
    kind: Literal["expect_denied"] = "expect_denied"
    line: int = 0
    count: int = Field(ge=0)


class ExpectBlocked(BaseModel):
    kind: Literal["expect_blocked"] = "expect_blocked"
    line: int = 0
    count: int = Field(ge=0)


class ExpectUntrustedRead(BaseModel):
    kind: Literal["expect_untrusted_read"] = "expect_untrusted_read"
    line: int = 0
    field_id: str
    expected: str = ""


Step = Annotated[
    Union[
        RegisterField,
        SetValue,
        CallQm,
        NetworkPost,
        SmsSend,
        Exfiltrate,
        ExpectDelivered,
        ExpectDenied,
        ExpectBlocked,
        ExpectUntrustedRead,
    ],
    Field(discriminator="kind"),
]


class Scenario(BaseModel):
    """An executable script over a fresh runtime."""

    name: str
    manifest_path: Path
    steps: list[Step] = Field(default_factory=list)


class ExpectationResult(BaseModel):
    """Outcome of one `expect` step."""

    line: int = 0
    description: str
    passed: bool
    detail: str = ""


class ScenarioResult(BaseModel):
    """Everything a scenario run produced."""

    name: str
    attempts: list[SinkAttempt] = Field(default_factory=list)
    expectations: list[ExpectationResult] = Field(default_factory=list)
    delivered: int = 0
    denied: int = 0
    blocked: int = 0
    errors: list[str] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.errors and all(e.passed for e in self.expectations)

    def export_log(self) -> str:
        return "\n".join(attempt.export_line() for attempt in self.attempts)
