"""Tests for Pydantic models."""

import pytest
from pydantic import ValidationError

from opaqueflow.models import (
    AttemptStatus,
    Decision,
    DenialReason,
    FlowRule,
    Handle,
    LabelVerdict,
    Manifest,
    NormalizedUrl,
    OpaqueHandle,
    Plain,
    SinkAttempt,
    SinkKind,
    SinkRequest,
    TaintLabel,
    TaintSet,
    TransportKind,
    UrlFilter,
    decode_payload,
    encode_payload,
)


class TestPayloadCodec:
    """Canonical JSON encoding of QM values."""

    def test_keys_sorted_and_compact(self):
        assert encode_payload({"b": 1, "a": [1, 2]}) == b'{"a":[1,2],"b":1}'

    def test_non_ascii_kept_as_utf8(self):
        assert encode_payload("pässword") == '"pässword"'.encode("utf-8")

    def test_nan_rejected(self):
        with pytest.raises(ValueError):
            encode_payload(float("nan"))

    def test_decode_inverts_encode(self):
        value = {"email": "alice@example.com", "tries": 3, "ok": True, "none": None}
        assert decode_payload(encode_payload(value)) == value


class TestTaintLabel:
    """Tests for TaintLabel model."""

    def test_create_label(self):
        label = TaintLabel(app_id="com.example.smartapp", name="Taint_UI")
        assert str(label) == "com.example.smartapp/Taint_UI"

    def test_parse_text_form(self):
        label = TaintLabel.parse("com.example.smartapp/Taint_UI")
        assert label.app_id == "com.example.smartapp"
        assert label.name == "Taint_UI"

    def test_parse_without_slash(self):
        with pytest.raises(ValueError):
            TaintLabel.parse("Taint_UI")

    @pytest.mark.parametrize("app_id", ["example", "com..example", "1com.example", "com.ex-ample"])
    def test_invalid_app_id(self, app_id):
        with pytest.raises(ValidationError):
            TaintLabel(app_id=app_id, name="X")

    @pytest.mark.parametrize("name", ["", "9lives", "has space", "dash-ed"])
    def test_invalid_name(self, name):
        with pytest.raises(ValidationError):
            TaintLabel(app_id="a.b", name=name)

    def test_labels_are_hashable_and_frozen(self):
        label = TaintLabel(app_id="a.b", name="X")
        assert {label, TaintLabel(app_id="a.b", name="X")} == {label}
        with pytest.raises(ValidationError):
            label.name = "Y"


class TestTaintSet:
    """Tests for TaintSet model."""

    def test_empty_by_default(self):
        assert len(TaintSet()) == 0
        assert str(TaintSet()) == "{}"

    def test_union_operator(self):
        x = TaintLabel(app_id="a.b", name="X")
        y = TaintLabel(app_id="a.b", name="Y")
        combined = TaintSet.of(x) | TaintSet.of(y)
        assert x in combined and y in combined
        assert len(combined) == 2

    def test_render_is_sorted(self):
        y = TaintLabel(app_id="a.b", name="Y")
        x = TaintLabel(app_id="a.b", name="X")
        assert TaintSet.of(y, x).render() == "a.b/X,a.b/Y"

    def test_issubset(self):
        x = TaintLabel(app_id="a.b", name="X")
        assert TaintSet().issubset(TaintSet.of(x))
        assert not TaintSet.of(x).issubset(TaintSet())


class TestQmArgs:
    def test_plain_accepts_json_values(self):
        assert Plain(value={"k": [1, "two"]}).value == {"k": [1, "two"]}

    def test_plain_rejects_unserializable(self):
        with pytest.raises(ValidationError):
            Plain(value=object())

    def test_handle_arg(self):
        handle = OpaqueHandle(handle_id="ab" * 16)
        assert Handle(handle=handle).kind == "handle"


class TestUrlModels:
    def test_normalized_url_render(self):
        url = NormalizedUrl(scheme="http", host="appcloudserver.com", port=80, path="/login")
        assert url.render() == "http://appcloudserver.com:80/login"

    def test_normalized_url_render_with_query(self):
        url = NormalizedUrl(scheme="https", host="h.io", port=443, path="/", query="a=1")
        assert str(url) == "https://h.io:443/?a=1"

    def test_filter_prefix_must_be_absolute(self):
        with pytest.raises(ValidationError):
            UrlFilter(scheme="http", host="h.io", port=80, path_prefix="login")

    def test_filter_prefix_rejects_dot_segments(self):
        with pytest.raises(ValidationError):
            UrlFilter(scheme="http", host="h.io", port=80, path_prefix="/a/../b")


class TestFlowRuleAndManifest:
    """Tests for FlowRule and Manifest models."""

    def test_filter_only_on_network(self, taint_ui):
        url_filter = UrlFilter(scheme="http", host="h.io", port=80)
        with pytest.raises(ValidationError):
            FlowRule(label=taint_ui, sink=SinkKind.SMS, filter=url_filter)

    def test_rule_render(self, taint_ui):
        url_filter = UrlFilter(scheme="http", host="appcloudserver.com", port=80)
        rule = FlowRule(label=taint_ui, sink=SinkKind.NETWORK, filter=url_filter)
        assert rule.render() == (
            "com.example.smartapp/Taint_UI -> NETWORK url http://appcloudserver.com:80/"
        )

    def test_manifest_rejects_foreign_label(self):
        foreign = TaintLabel(app_id="org.other", name="X")
        with pytest.raises(ValidationError):
            Manifest(app_id="com.example.smartapp", declared_labels=(foreign,))

    def test_manifest_rejects_rule_on_undeclared_label(self, taint_ui, taint_cam):
        with pytest.raises(ValidationError):
            Manifest(
                app_id="com.example.smartapp",
                declared_labels=(taint_ui,),
                rules=(FlowRule(label=taint_cam, sink=SinkKind.SMS),),
            )

    def test_manifest_rejects_duplicate_rule(self, taint_ui):
        rule = FlowRule(label=taint_ui, sink=SinkKind.SMS)
        with pytest.raises(ValidationError):
            Manifest(app_id="com.example.smartapp", declared_labels=(taint_ui,), rules=(rule, rule))

    def test_label_lookup(self, login_manifest, taint_ui):
        assert login_manifest.label("Taint_UI") == taint_ui
        assert login_manifest.label("Nope") is None
        assert login_manifest.declares(taint_ui)


class TestDecisionModels:
    def test_sink_request_needs_url_for_network(self):
        with pytest.raises(ValidationError):
            SinkRequest(sink=SinkKind.NETWORK)

    def test_sink_request_forbids_url_for_sms(self):
        url = NormalizedUrl(scheme="http", host="h.io", port=80)
        with pytest.raises(ValidationError):
            SinkRequest(sink=SinkKind.SMS, url=url)

    def test_verdict_carries_rule_or_reason(self, taint_ui):
        with pytest.raises(ValidationError):
            LabelVerdict(label=taint_ui)
        verdict = LabelVerdict(label=taint_ui, reason=DenialReason.NO_RULE_FOR_SINK)
        assert not verdict.matched

    def test_decision_allowed_must_agree_with_verdicts(self, taint_ui):
        denied = LabelVerdict(label=taint_ui, reason=DenialReason.URL_FILTER_MISMATCH)
        with pytest.raises(ValidationError):
            Decision(allowed=True, per_label=(denied,))
        decision = Decision(allowed=False, per_label=(denied,))
        assert decision.verdict_for(taint_ui) == denied
        assert decision.denied_verdicts() == [denied]

    def test_empty_decision_is_allowed(self):
        assert Decision(allowed=True).per_label == ()


class TestSinkAttempt:
    """Tests for SinkAttempt model."""

    def _attempt(self, allowed, taints):
        per_label = () if allowed else tuple(
            LabelVerdict(label=label, reason=DenialReason.NO_RULE_FOR_SINK)
            for label in taints.sorted_labels()
        )
        return SinkAttempt(
            attempt_id=1,
            sink=SinkKind.SMS,
            destination="+15550100",
            taints=taints,
            decision=Decision(allowed=allowed, per_label=per_label),
            status=AttemptStatus.STAGED if allowed else AttemptStatus.DENIED,
        )

    def test_export_line_allow(self):
        assert self._attempt(True, TaintSet()).export_line() == "ALLOW SMS +15550100 taints="

    def test_export_line_deny(self, taint_ui):
        attempt = self._attempt(False, TaintSet.of(taint_ui))
        assert attempt.export_line() == "DENY SMS +15550100 taints=com.example.smartapp/Taint_UI"

    def test_denied_attempt_cannot_be_marked_delivered(self, taint_ui):
        attempt = self._attempt(False, TaintSet.of(taint_ui))
        with pytest.raises(ValidationError):
            attempt.delivered = True

    def test_status_is_mutable(self):
        attempt = self._attempt(True, TaintSet())
        attempt.status = AttemptStatus.DELIVERED
        assert attempt.status == AttemptStatus.DELIVERED


class TestEnums:
    def test_enum_values(self):
        assert SinkKind.NETWORK.value == "NETWORK"
        assert DenialReason.URL_FILTER_MISMATCH.value == "UrlFilterMismatch"
        assert TransportKind("http") == TransportKind.HTTP
        assert AttemptStatus.DISCARDED.value == "discarded"
