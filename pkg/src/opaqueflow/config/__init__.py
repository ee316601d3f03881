"""Configuration module for opaqueflow."""

from opaqueflow.config.loader import configure_logging, load_settings, reload_settings

__all__ = ["configure_logging", "load_settings", "reload_settings"]
