"""Configuration loader for opaqueflow."""

import logging
import os
from pathlib import Path
from typing import Any

import yaml

ENV_PREFIX = "OPAQUEFLOW"
TRANSPORT_ENV_VAR = f"{ENV_PREFIX}_TRANSPORT"

# Global cache for settings
_settings_cache: dict | None = None


def load_settings(settings_path: str | Path | None = None) -> dict:
    """
    Load settings from YAML file with environment variable overrides.

    Args:
        settings_path: Optional path to settings file. If not provided,
                      uses the default settings.yaml in config directory.

    Returns:
        Dictionary of settings with env var overrides applied.
    """
    global _settings_cache

    if _settings_cache is not None:
        return _settings_cache

    if settings_path is None:
        config_dir = Path(__file__).parent
        settings_path = config_dir / "settings.yaml"
    else:
        settings_path = Path(settings_path)

    if not settings_path.exists():
        raise FileNotFoundError(f"Settings file not found: {settings_path}")

    with open(settings_path, encoding="utf-8") as f:
        settings = yaml.safe_load(f) or {}

    # Apply environment variable overrides
    settings = _apply_env_overrides(settings)

    _settings_cache = settings
    return settings


def reload_settings(settings_path: str | Path | None = None) -> dict:
    """Force reload settings, ignoring cache."""
    global _settings_cache
    _settings_cache = None
    return load_settings(settings_path)


def _apply_env_overrides(settings: dict, prefix: str = ENV_PREFIX) -> dict:
    """
    Apply environment variable overrides to settings.

    Environment variable pattern: {PREFIX}_{SECTION}_{KEY}=value
    Example: OPAQUEFLOW_LOGGING_LEVEL=DEBUG

    Args:
        settings: Original settings dictionary
        prefix: Environment variable prefix

    Returns:
        Settings with environment variable overrides applied.
    """
    for key, value in os.environ.items():
        if not key.startswith(f"{prefix}_"):
            continue

        # Parse the key: OPAQUEFLOW_SECTION_SUBSECTION_KEY
        parts = key[len(prefix) + 1 :].lower().split("_")

        if len(parts) < 2:
            continue

        section = settings.setdefault(parts[0], {})
        if isinstance(section, dict):
            _set_nested(section, parts[1:], _parse_value(value))

    return settings


def _set_nested(current: dict, parts: list[str], value: Any) -> None:
    """
    Set value under the key spelled by parts.

    Existing subsections are descended into; whatever remains is joined
    back with underscores, so OPAQUEFLOW_TRANSPORT_HTTP_USER_AGENT lands on
    transport.http.user_agent.
    """
    while len(parts) > 1 and "_".join(parts) not in current:
        for i in range(len(parts) - 1, 0, -1):
            child = current.get("_".join(parts[:i]))
            if isinstance(child, dict):
                current, parts = child, parts[i:]
                break
        else:
            break
    current["_".join(parts)] = value


def _parse_value(value: str) -> Any:
    """
    Parse a string value into appropriate Python type.

    Args:
        value: String value from environment variable

    Returns:
        Parsed value (bool, int, float, or string)
    """
    # Boolean
    if value.lower() in ("true", "yes"):
        return True
    if value.lower() in ("false", "no"):
        return False

    # Integer
    try:
        return int(value)
    except ValueError:
        pass

    # Float
    try:
        return float(value)
    except ValueError:
        pass

    # String
    return value


def get_env_value(env_var_name: str, default: str = "") -> str:
    """
    Get a value from an environment variable.

    Args:
        env_var_name: Name of the environment variable
        default: Default value if not set

    Returns:
        Environment variable value or default
    """
    return os.environ.get(env_var_name, default)


def resolve_transport_kind(settings: dict) -> str:
    """
    Pick the transport kind: OPAQUEFLOW_TRANSPORT wins over transport.kind.

    Returns:
        Lowercased kind name, "fake" when nothing is configured.
    """
    kind = get_env_value(TRANSPORT_ENV_VAR).strip()
    if not kind:
        kind = str(settings.get("transport", {}).get("kind", "fake"))
    return kind.lower()


def configure_logging(settings: dict) -> None:
    """Apply the `logging` section (level and format) to the root logger."""
    section = settings.get("logging", {})
    level_name = str(section.get("level", "WARNING")).upper()
    level = getattr(logging, level_name, logging.WARNING)
    logging.basicConfig(
        level=level,
        format=section.get("format", "%(levelname)s %(name)s: %(message)s"),
    )
    logging.getLogger("opaqueflow").setLevel(level)
