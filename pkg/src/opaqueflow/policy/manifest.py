"""Line-oriented app manifest: parser and canonical writer.

Grammar (one directive per line, `#` starts a comment):

    app <app-id>                        exactly once, first directive
    label <name>                        declares (app-id, name)
    allow <name> -> <SINK>              unfiltered rule
    allow <name> -> NETWORK url <url>   filtered rule
"""

import logging
import re
from pathlib import Path

from pydantic import ValidationError

from opaqueflow.errors import ManifestError, UrlError
from opaqueflow.models import (
    APP_ID_PATTERN,
    NAME_PATTERN,
    FlowRule,
    Manifest,
    SinkKind,
    TaintLabel,
    UrlFilter,
)
from opaqueflow.policy.urls import parse_filter

logger = logging.getLogger(__name__)

_TOKEN = re.compile(r"\S+")
_COMMENT = re.compile(r"(?:^|\s)#")


def _tokens(line: str) -> list[tuple[str, int]]:
    """Tokens of a line with their 1-based columns, comments removed."""
    match = _COMMENT.search(line)
    if match:
        line = line[: match.start()]
    return [(m.group(0), m.start() + 1) for m in _TOKEN.finditer(line)]


def parse_manifest(text: str) -> Manifest:
    """
    Parse manifest text into a validated Manifest.

    Raises:
        ManifestError: with line and column of the offending token.
    """
    app_id: str | None = None
    labels: dict[str, TaintLabel] = {}
    rules: list[FlowRule] = []
    seen_rules: set[FlowRule] = set()

    for lineno, line in enumerate(text.splitlines(), start=1):
        tokens = _tokens(line)
        if not tokens:
            continue
        directive, column = tokens[0]

        if app_id is None and directive != "app":
            raise ManifestError("manifest must start with an 'app' directive", lineno, column)

        if directive == "app":
            if app_id is not None:
                raise ManifestError("duplicate 'app' directive", lineno, column)
            if len(tokens) != 2:
                raise ManifestError("expected: app <app-id>", lineno, column)
            value, value_col = tokens[1]
            if not APP_ID_PATTERN.fullmatch(value):
                raise ManifestError(f"invalid app id {value!r}", lineno, value_col)
            app_id = value

        elif directive == "label":
            if len(tokens) != 2:
                raise ManifestError("expected: label <name>", lineno, column)
            name, name_col = tokens[1]
            if not NAME_PATTERN.fullmatch(name):
                raise ManifestError(f"invalid label name {name!r}", lineno, name_col)
            if name in labels:
                raise ManifestError(f"duplicate label declaration: {name}", lineno, name_col)
            labels[name] = TaintLabel(app_id=app_id, name=name)

        elif directive == "allow":
            rule = _parse_allow(tokens, labels, lineno)
            if rule in seen_rules:
                raise ManifestError(f"duplicate rule: {rule.render()}", lineno, column)
            seen_rules.add(rule)
            rules.append(rule)

        else:
            raise ManifestError(f"unknown directive {directive!r}", lineno, column)

    if app_id is None:
        raise ManifestError("missing 'app' directive", 1, 1)

    manifest = Manifest(
        app_id=app_id, declared_labels=tuple(labels.values()), rules=tuple(rules)
    )
    logger.debug(
        "parsed manifest %s: %d labels, %d rules",
        app_id,
        len(manifest.declared_labels),
        len(manifest.rules),
    )
    return manifest


def _parse_allow(
    tokens: list[tuple[str, int]], labels: dict[str, TaintLabel], lineno: int
) -> FlowRule:
    directive_col = tokens[0][1]
    if len(tokens) not in (4, 6) or tokens[2][0] != "->":
        raise ManifestError(
            "expected: allow <name> -> <SINK> [url <url>]", lineno, directive_col
        )
    name, name_col = tokens[1]
    sink_text, sink_col = tokens[3]

    label = labels.get(name)
    if label is None:
        raise ManifestError(f"undeclared label {name}", lineno, name_col)

    try:
        sink = SinkKind(sink_text)
    except ValueError:
        raise ManifestError(f"unknown sink {sink_text!r}", lineno, sink_col) from None

    url_filter: UrlFilter | None = None
    if len(tokens) == 6:
        keyword, keyword_col = tokens[4]
        if keyword != "url":
            raise ManifestError(f"expected 'url', got {keyword!r}", lineno, keyword_col)
        if sink != SinkKind.NETWORK:
            raise ManifestError(
                f"URL filter not allowed on {sink.value} rules", lineno, keyword_col
            )
        raw_url, url_col = tokens[5]
        try:
            url_filter = parse_filter(raw_url)
        except (UrlError, ValidationError) as e:
            raise ManifestError(f"bad URL filter: {e}", lineno, url_col) from e

    return FlowRule(label=label, sink=sink, filter=url_filter)


def render_manifest(manifest: Manifest) -> str:
    """Canonical text form; parse_manifest(render_manifest(m)) == m."""
    lines = [f"app {manifest.app_id}"]
    lines.extend(f"label {label.name}" for label in manifest.declared_labels)
    for rule in manifest.rules:
        line = f"allow {rule.label.name} -> {rule.sink.value}"
        if rule.filter is not None:
            line += f" url {rule.filter.render()}"
        lines.append(line)
    return "\n".join(lines) + "\n"


def load_manifest(path: str | Path) -> Manifest:
    """Read and parse a manifest file (OSError propagates)."""
    text = Path(path).read_text(encoding="utf-8")
    return parse_manifest(text)
