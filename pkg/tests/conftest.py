"""Shared pytest fixtures for opaqueflow tests."""

from pathlib import Path
from unittest.mock import Mock, patch

import pytest

FIXTURES_DIR = Path(__file__).parent / "fixtures"

LOGIN_MANIFEST = """\
app com.example.smartapp
label Taint_UI
allow Taint_UI -> NETWORK url http://appcloudserver.com
"""

APP_ID = "com.example.smartapp"


# ─────────────────────────────────────────────────────────────────────────────
# Model Fixtures
# ─────────────────────────────────────────────────────────────────────────────


@pytest.fixture
def taint_ui():
    """The login app's UI label."""
    from opaqueflow.models import TaintLabel

    return TaintLabel(app_id=APP_ID, name="Taint_UI")


@pytest.fixture
def taint_cam():
    from opaqueflow.models import TaintLabel

    return TaintLabel(app_id=APP_ID, name="Taint_CAM")


@pytest.fixture
def login_manifest():
    """Manifest of the login app: UI data may reach appcloudserver.com only."""
    from opaqueflow.policy import parse_manifest

    return parse_manifest(LOGIN_MANIFEST)


@pytest.fixture
def two_label_manifest():
    """Taint_UI may go to appcloudserver.com or by SMS; Taint_CAM has no rules."""
    from opaqueflow.policy import parse_manifest

    return parse_manifest(
        "app com.example.smartapp\n"
        "label Taint_UI\n"
        "label Taint_CAM\n"
        "allow Taint_UI -> NETWORK url http://appcloudserver.com\n"
        "allow Taint_UI -> SMS\n"
    )


# ─────────────────────────────────────────────────────────────────────────────
# Runtime Fixtures
# ─────────────────────────────────────────────────────────────────────────────


@pytest.fixture
def recording_transport():
    from opaqueflow.transports import RecordingTransport

    return RecordingTransport()


@pytest.fixture
def runtime(login_manifest, recording_transport):
    """
    Login-app runtime with the built-in QMs, a recording transport and the
    emailUI / passwordUI fields filled in.
    """
    from opaqueflow.runtime import FlowRuntime
    from opaqueflow.scenarios import register_builtin_qms

    rt = FlowRuntime(login_manifest, transport=recording_transport)
    register_builtin_qms(rt.registry)
    label = login_manifest.label("Taint_UI")
    rt.store.register_field("emailUI", label)
    rt.store.register_field("passwordUI", label)
    rt.store.set_value("emailUI", "alice@example.com")
    rt.store.set_value("passwordUI", "hunter2")
    return rt


@pytest.fixture
def two_label_runtime(two_label_manifest, recording_transport):
    """Runtime with fields ui (Taint_UI) and cam (Taint_CAM)."""
    from opaqueflow.runtime import FlowRuntime
    from opaqueflow.scenarios import register_builtin_qms

    rt = FlowRuntime(two_label_manifest, transport=recording_transport)
    register_builtin_qms(rt.registry)
    rt.store.register_field("ui", two_label_manifest.label("Taint_UI"))
    rt.store.register_field("cam", two_label_manifest.label("Taint_CAM"))
    rt.store.set_value("ui", "typed text")
    rt.store.set_value("cam", "jpeg-bytes")
    return rt


# ─────────────────────────────────────────────────────────────────────────────
# Configuration Fixtures
# ─────────────────────────────────────────────────────────────────────────────


@pytest.fixture(autouse=True)
def _reset_settings_cache():
    """Tests that load alternate settings must not leak them into others."""
    from opaqueflow.config import loader

    loader._settings_cache = None
    yield
    loader._settings_cache = None


@pytest.fixture
def sample_config():
    """Sample configuration dictionary for testing."""
    return {
        "project": {"name": "opaqueflow", "version": "0.1.0"},
        "runtime": {"handle_bytes": 8},
        "transport": {
            "kind": "fake",
            "http": {"timeout": 3, "user_agent": "opaqueflow-test"},
        },
        "logging": {"level": "INFO", "format": "%(levelname)s %(message)s"},
        "cli": {"default_format": "text"},
    }


@pytest.fixture
def mock_settings_yaml(tmp_path, sample_config):
    """Create a temporary settings.yaml file for testing."""
    import yaml

    settings_file = tmp_path / "settings.yaml"
    with open(settings_file, "w") as f:
        yaml.dump(sample_config, f)
    return settings_file


# ─────────────────────────────────────────────────────────────────────────────
# File Fixtures
# ─────────────────────────────────────────────────────────────────────────────


@pytest.fixture
def fixtures_dir():
    return FIXTURES_DIR


@pytest.fixture
def login_manifest_file(tmp_path):
    path = tmp_path / "login.manifest"
    path.write_text(LOGIN_MANIFEST, encoding="utf-8")
    return path


# ─────────────────────────────────────────────────────────────────────────────
# HTTP Mocks
# ─────────────────────────────────────────────────────────────────────────────


@pytest.fixture
def mock_requests_post():
    """Mock requests.post as used by the HTTP transport."""
    with patch("opaqueflow.transports.http.requests.post") as mock_post:
        mock_response = Mock()
        mock_response.status_code = 200
        mock_response.reason = "OK"
        mock_response.raise_for_status.return_value = None
        mock_post.return_value = mock_response
        yield mock_post


# ─────────────────────────────────────────────────────────────────────────────
# Environment Variable Fixtures
# ─────────────────────────────────────────────────────────────────────────────


@pytest.fixture
def clean_env(monkeypatch):
    """Remove any OPAQUEFLOW_* variables inherited from the shell."""
    import os

    for key in list(os.environ):
        if key.startswith("OPAQUEFLOW_"):
            monkeypatch.delenv(key, raising=False)
    return monkeypatch
