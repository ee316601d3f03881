"""Flow policies: manifests, URL filters, the checker and disclosure."""

from opaqueflow.policy.checker import check_flow, disclosure_report, disclosure_report_json
from opaqueflow.policy.manifest import load_manifest, parse_manifest, render_manifest
from opaqueflow.policy.urls import filter_matches, normalize_url, parse_filter

__all__ = [
    "check_flow",
    "disclosure_report",
    "disclosure_report_json",
    "filter_matches",
    "load_manifest",
    "normalize_url",
    "parse_filter",
    "parse_manifest",
    "render_manifest",
]
