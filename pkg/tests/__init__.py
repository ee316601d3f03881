"""Tests for opaqueflow."""
