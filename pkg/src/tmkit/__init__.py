"""Toolkit for thinging-machine models: parse, validate, transform, simulate, export."""

from .core import (
    Chronology,
    EventDef,
    Flow,
    FlowArc,
    Machine,
    Model,
    StageKind,
    StageRef,
    TriggerArc,
    region_subgraph,
    resolve,
)
from .dsl import Diagnostic, ParsedBundle, TMSyntaxError, parse, serialize

__version__ = "0.1.0"

__all__ = [
    "Chronology",
    "Diagnostic",
    "EventDef",
    "Flow",
    "FlowArc",
    "Machine",
    "Model",
    "ParsedBundle",
    "StageKind",
    "StageRef",
    "TMSyntaxError",
    "TriggerArc",
    "parse",
    "region_subgraph",
    "resolve",
    "serialize",
]
