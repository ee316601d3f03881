"""Scripted end-to-end scenarios and the built-in QM library they use."""

from opaqueflow.scenarios.library import BUILTIN_QMS, register_builtin_qms
from opaqueflow.scenarios.parser import (
    BUILTIN_DIR,
    builtin_scenarios,
    load_scenario,
    parse_scenario,
    resolve_scenario,
)
from opaqueflow.scenarios.runner import ScenarioRunner, run_scenario

__all__ = [
    "BUILTIN_DIR",
    "BUILTIN_QMS",
    "ScenarioRunner",
    "builtin_scenarios",
    "load_scenario",
    "parse_scenario",
    "register_builtin_qms",
    "resolve_scenario",
    "run_scenario",
]
