"""Flow-policy checker and install-time disclosure report."""

import json
import logging

from opaqueflow.models import (
    Decision,
    DenialReason,
    LabelVerdict,
    Manifest,
    SinkKind,
    SinkRequest,
    TaintLabel,
)
from opaqueflow.policy.urls import filter_matches

logger = logging.getLogger(__name__)


def _verdict(manifest: Manifest, label: TaintLabel, request: SinkRequest) -> LabelVerdict:
    same_sink_seen = False
    for rule in manifest.rules:
        if rule.label != label or rule.sink != request.sink:
            continue
        same_sink_seen = True
        if request.sink != SinkKind.NETWORK or rule.filter is None:
            return LabelVerdict(label=label, rule=rule)
        if filter_matches(rule.filter, request.url):
            return LabelVerdict(label=label, rule=rule)
    reason = (
        DenialReason.URL_FILTER_MISMATCH if same_sink_seen else DenialReason.NO_RULE_FOR_SINK
    )
    return LabelVerdict(label=label, reason=reason)


def check_flow(manifest: Manifest, request: SinkRequest) -> Decision:
    """
    Decide a sink request.

    Every label in the request's taint set must be covered by a rule for
    the requested sink (and, for NETWORK, a matching or absent URL filter).
    Untainted requests are always allowed. Pure function.
    """
    verdicts = tuple(_verdict(manifest, label, request) for label in request.taints.sorted_labels())
    decision = Decision(allowed=all(v.matched for v in verdicts), per_label=verdicts)
    if not decision.allowed:
        logger.debug(
            "policy denies %s %s for %s",
            request.sink.value,
            request.url.render() if request.url else "",
            request.taints.render(),
        )
    return decision


def disclosure_report(manifest: Manifest) -> str:
    """Header line followed by one `appId/label -> SINK [url <filter>]` line per rule."""
    lines = [f"flows for {manifest.app_id}:"]
    lines.extend(rule.render() for rule in manifest.rules)
    return "\n".join(lines)


def disclosure_report_json(manifest: Manifest) -> str:
    """The disclosure report as a JSON document."""
    flows = [
        {
            "label": str(rule.label),
            "sink": rule.sink.value,
            "url": rule.filter.render() if rule.filter else None,
        }
        for rule in manifest.rules
    ]
    return json.dumps({"app_id": manifest.app_id, "flows": flows}, indent=2)
