"""Token-flow simulation of models."""

from .engine import (
    AmbiguousFlow,
    GuardFailure,
    OrderCheck,
    SimulationError,
    Thing,
    Trace,
    TraceRecord,
    check_order,
    detect_events,
    event_firings,
    run,
)
from .expr import ExprSyntaxError, GuardError, parse_expr
from .replay import ReplayReport, replay
from .scenario import (
    GuardRule,
    Injection,
    Scenario,
    ScenarioError,
    UnresolvedRef,
    dump_scenario,
    load_scenario,
)

__all__ = [
    "AmbiguousFlow",
    "ExprSyntaxError",
    "GuardError",
    "GuardFailure",
    "GuardRule",
    "Injection",
    "OrderCheck",
    "ReplayReport",
    "Scenario",
    "ScenarioError",
    "SimulationError",
    "Thing",
    "Trace",
    "TraceRecord",
    "UnresolvedRef",
    "check_order",
    "detect_events",
    "dump_scenario",
    "event_firings",
    "load_scenario",
    "parse_expr",
    "replay",
    "run",
]
