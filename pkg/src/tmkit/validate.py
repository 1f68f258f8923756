"""Structural, event and chronology checks.

Violations are data: every check runs to completion and returns a report.

Rule codes:

* ``R1-ILLEGAL-SUCCESSOR``  flow arc inside one machine not in :data:`LEGAL_SUCCESSORS`
* ``R2-TRIGGER-ENDPOINT``   trigger not from Process/Create or not into Create/Process
* ``R3-BOUNDARY``           flow arc between machines other than Transfer -> Transfer
* ``R4``                    reserved; terminal stages are unrestricted
* ``REF-UNRESOLVED``        arc endpoint that does not resolve
* ``EV-*`` / ``CH-*``       event-region and chronology problems
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from . import graphs
from .core import (
    Chronology,
    EventDef,
    Model,
    StageKind,
    StageRef,
    element_str,
    natural_key,
)

C, P, RL, RC, T = (
    StageKind.CREATE,
    StageKind.PROCESS,
    StageKind.RELEASE,
    StageKind.RECEIVE,
    StageKind.TRANSFER,
)

LEGAL_SUCCESSORS: dict = {
    T: frozenset({RC}),
    RC: frozenset({P, RL}),
    P: frozenset({RL}),
    C: frozenset({P, RL}),
    RL: frozenset({T}),
}

TRIGGER_SOURCES = frozenset({P, C})
TRIGGER_TARGETS = frozenset({C, P})


@dataclass(frozen=True)
class Violation:
    code: str
    refs: tuple
    message: str

    def __str__(self) -> str:
        where = ", ".join(self.refs)
        return f"{self.code}: {self.message}" + (f" [{where}]" if where else "")


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple = field(default_factory=tuple)

    @property
    def passed(self) -> bool:
        return not self.violations

    def __add__(self, other: "ValidationReport") -> "ValidationReport":
        return ValidationReport(self.violations + other.violations)

    def codes(self) -> list[str]:
        return [v.code for v in self.violations]

    def render(self, title: str = "") -> str:
        lines = []
        if title:
            lines.append(f"{title}: {'PASS' if self.passed else 'FAIL'} ({len(self.violations)} violations)")
        lines.extend(f"  {v}" for v in self.violations)
        return "\n".join(lines)


def legal_flow(source: StageRef, target: StageRef) -> bool:
    if source.machine_path != target.machine_path:
        return source.kind is T and target.kind is T
    return target.kind in LEGAL_SUCCESSORS[source.kind]


def legal_trigger(source: StageRef, target: StageRef) -> bool:
    return source.kind in TRIGGER_SOURCES and target.kind in TRIGGER_TARGETS


def validate_structure(model: Model) -> ValidationReport:
    out = []
    stages = model.stage_set
    for arc in model.flow_arcs:
        refs = (str(arc.source), str(arc.target))
        missing = [r for r in arc.pair if r not in stages]
        if missing:
            out.append(Violation("REF-UNRESOLVED", refs, f"arc endpoint {missing[0]} does not resolve"))
            continue
        if arc.crosses_machines:
            if not legal_flow(arc.source, arc.target):
                out.append(
                    Violation(
                        "R3-BOUNDARY",
                        refs,
                        f"flow between machines {arc.source.machine!r} and {arc.target.machine!r} "
                        f"must be transfer -> transfer, not {arc.source.kind.value} -> {arc.target.kind.value}",
                    )
                )
        elif not legal_flow(arc.source, arc.target):
            allowed = ", ".join(sorted(k.value for k in LEGAL_SUCCESSORS[arc.source.kind]))
            out.append(
                Violation(
                    "R1-ILLEGAL-SUCCESSOR",
                    refs,
                    f"{arc.source.kind.value} -> {arc.target.kind.value} inside {arc.source.machine!r}; "
                    f"{arc.source.kind.value} may only flow to {allowed}",
                )
            )
    for arc in model.trigger_arcs:
        refs = (str(arc.source), str(arc.target))
        missing = [r for r in arc.pair if r not in stages]
        if missing:
            out.append(Violation("REF-UNRESOLVED", refs, f"trigger endpoint {missing[0]} does not resolve"))
            continue
        if not legal_trigger(arc.source, arc.target):
            out.append(
                Violation(
                    "R2-TRIGGER-ENDPOINT",
                    refs,
                    f"trigger {arc.source.kind.value} -> {arc.target.kind.value}; "
                    "triggers run from process/create into create/process",
                )
            )
    return ValidationReport(tuple(out))


def validate_events(model: Model, events: Iterable[EventDef]) -> ValidationReport:
    out = []
    seen: set = set()
    stages = model.stage_set
    pairs = model.arcs_by_pair
    for ev in events:
        if ev.id in seen:
            out.append(Violation("EV-DUPLICATE-ID", (ev.id,), f"event id {ev.id!r} declared more than once"))
        seen.add(ev.id)
        if not ev.region:
            out.append(Violation("EV-EMPTY-REGION", (ev.id,), f"event {ev.id} has an empty region"))
        for element in ev.region:
            if isinstance(element, StageRef):
                present = element in stages
            else:
                present = tuple(element) in pairs
            if not present:
                out.append(
                    Violation(
                        "EV-FOREIGN-ELEMENT",
                        (ev.id, element_str(element)),
                        f"event {ev.id} names {element_str(element)}, which is not in the model",
                    )
                )
    return ValidationReport(tuple(out))


def validate_chronology(events: Iterable[EventDef], chron: Chronology) -> ValidationReport:
    out = []
    known = [ev.id for ev in events]
    known_set = set(known)
    for a, b in chron.edges:
        for x in (a, b):
            if x not in known_set:
                out.append(Violation("CH-UNKNOWN-EVENT", (a, b), f"edge {a} -> {b} names undeclared event {x}"))
    nodes = sorted(known_set | chron.ids, key=natural_key)
    adj = graphs.adjacency(nodes, chron.edges)
    for cycle in graphs.find_cycles(adj):
        shown = " -> ".join([*cycle, cycle[0]])
        out.append(Violation("CH-CYCLE", tuple(cycle), f"chronology cycle {shown}"))
    return ValidationReport(tuple(out))


def validate_bundle(bundle) -> ValidationReport:
    """All three checks on a parsed bundle."""
    return (
        validate_structure(bundle.model)
        + validate_events(bundle.model, bundle.events)
        + validate_chronology(bundle.events, bundle.chronology)
    )
