"""Tests for the sensitive UI field store."""

import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from opaqueflow.errors import (
    ContextEscapedError,
    DuplicateFieldError,
    QmPanickedError,
    UndeclaredLabelError,
    UnknownFieldError,
)
from opaqueflow.models import Manifest, TaintLabel, TaintSet, decode_payload
from opaqueflow.runtime import FlowRuntime
from opaqueflow.scenarios import register_builtin_qms
from opaqueflow.sensitive_store import (
    SensitiveStore,
    get_text_untrusted,
    register_field,
    set_value,
    trusted_get_text,
)


def trusted_read(runtime, field_id):
    handle = runtime.qm_call("QM_getUIValue", [field_id])
    return decode_payload(runtime.handles._payload_of(handle))


class TestRegisterField:
    """Tests for register_field."""

    def test_registered_field_reads_empty(self, runtime, taint_ui):
        register_field(runtime.store, "nameUI", taint_ui)
        assert trusted_read(runtime, "nameUI") == ""
        assert runtime.store.label_of("nameUI") == taint_ui

    def test_duplicate_field(self, runtime, taint_ui):
        with pytest.raises(DuplicateFieldError):
            register_field(runtime.store, "emailUI", taint_ui)

    def test_undeclared_label(self, runtime, taint_cam):
        with pytest.raises(UndeclaredLabelError):
            register_field(runtime.store, "photo", taint_cam)

    def test_field_ids(self, runtime):
        assert runtime.store.field_ids() == ["emailUI", "passwordUI"]


class TestSetValue:
    """Tests for set_value."""

    def test_write_then_trusted_read(self, runtime):
        set_value(runtime.store, "passwordUI", "correct horse")
        assert trusted_read(runtime, "passwordUI") == "correct horse"

    def test_unknown_field(self, runtime):
        with pytest.raises(UnknownFieldError):
            set_value(runtime.store, "ghostUI", "x")

    def test_empty_value(self, runtime):
        set_value(runtime.store, "passwordUI", "")
        assert trusted_read(runtime, "passwordUI") == ""


class TestUntrustedRead:
    """Code outside a QM only ever sees the empty string."""

    def test_after_write(self, runtime):
        assert get_text_untrusted(runtime.store, "passwordUI") == ""

    def test_untouched_field(self, runtime, taint_ui):
        register_field(runtime.store, "fresh", taint_ui)
        assert get_text_untrusted(runtime.store, "fresh") == ""

    def test_unknown_field(self, runtime):
        with pytest.raises(UnknownFieldError):
            get_text_untrusted(runtime.store, "ghostUI")

    @given(st.text())
    def test_any_value_is_hidden(self, value):
        label = TaintLabel(app_id="a.b", name="X")
        store = SensitiveStore([label])
        store.register_field("f", label)
        store.set_value("f", value)
        assert store.get_text_untrusted("f") == ""


class TestTrustedRead:
    """Tests for trusted_get_text."""

    def test_inside_qm(self, runtime, taint_ui):
        handle = runtime.qm_call("QM_getUIValue", ["passwordUI"])
        assert handle.taints == TaintSet.of(taint_ui)
        assert decode_payload(runtime.handles._payload_of(handle)) == "hunter2"

    def test_module_function(self, runtime):
        runtime.register_qm("QM_read", lambda ctx, f: trusted_get_text(ctx, runtime.store, f))
        handle = runtime.qm_call("QM_read", ["emailUI"])
        assert decode_payload(runtime.handles._payload_of(handle)) == "alice@example.com"

    def test_escaped_context(self, runtime):
        captured = []
        runtime.register_qm("QM_keep", lambda ctx: captured.append(ctx))
        runtime.qm_call("QM_keep")
        with pytest.raises(ContextEscapedError):
            trusted_get_text(captured[0], runtime.store, "passwordUI")

    def test_two_labels_in_one_qm(self, two_label_runtime, taint_ui, taint_cam):
        rt = two_label_runtime
        rt.register_qm("QM_both", lambda ctx: [ctx.get_text("ui"), ctx.get_text("cam")])
        assert rt.qm_call("QM_both").taints == TaintSet.of(taint_ui, taint_cam)

    def test_unknown_field_inside_qm(self, runtime):
        with pytest.raises(QmPanickedError) as exc_info:
            runtime.qm_call("QM_getUIValue", ["ghostUI"])
        assert exc_info.value.error_type == "UnknownFieldError"


@pytest.mark.slow
class TestRandomInterleavings:
    """Untrusted reads stay empty while trusted reads track the last write."""

    LABELS = [TaintLabel(app_id="com.example.smartapp", name=n) for n in ("Taint_UI", "Taint_PIN")]

    def test_interleavings(self):
        rng = random.Random(99)
        manifest = Manifest(app_id="com.example.smartapp", declared_labels=tuple(self.LABELS))

        for _ in range(1000):
            rt = FlowRuntime(manifest, handle_bytes=8)
            register_builtin_qms(rt.registry)
            written: dict[str, str] = {}

            for _ in range(rng.randint(1, 12)):
                op = rng.choice(["register", "set", "untrusted", "trusted"])
                if op == "register" or not written:
                    field_id = f"field{len(written)}"
                    rt.store.register_field(field_id, rng.choice(self.LABELS))
                    written[field_id] = ""
                elif op == "set":
                    field_id = rng.choice(sorted(written))
                    value = "".join(rng.choice("abcXYZ019 @.") for _ in range(rng.randint(0, 10)))
                    rt.store.set_value(field_id, value)
                    written[field_id] = value
                elif op == "untrusted":
                    assert rt.store.get_text_untrusted(rng.choice(sorted(written))) == ""
                else:
                    field_id = rng.choice(sorted(written))
                    assert trusted_read(rt, field_id) == written[field_id]
