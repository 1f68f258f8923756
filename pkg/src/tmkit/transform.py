"""Graph transformations over validated models.

``simplify`` elides stages, leaving one node per machine and one edge per
(machine, machine, thing kind) crossing.  ``induced_precedence`` derives event
order from dataflow between event regions.

Both walk a *port graph*: every stage is a node, except that a Transfer stage
is split into an inbound and an outbound port.  Things arriving from another
machine sit on the inbound port and continue into the machine; things coming
from the machine's own Release sit on the outbound port and leave it.  The
simulator follows the same convention.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Optional

from . import graphs
from .core import (
    Chronology,
    EventDef,
    Flow,
    FlowArc,
    Machine,
    Model,
    StageKind,
    StageRef,
    natural_key,
)
from .validate import ValidationReport, validate_structure

__all__ = [
    "InvalidModel",
    "ComponentGraph",
    "simplify",
    "size_reduction",
    "CyclicInduction",
    "Witness",
    "PrecedenceDag",
    "induced_relation",
    "induced_precedence",
    "ChronologyComparison",
    "IdSetMismatch",
    "compare_chronology",
    "port_graph",
]

IN = "in"
OUT = "out"


class InvalidModel(ValueError):
    def __init__(self, report: ValidationReport) -> None:
        first = report.violations[0] if report.violations else None
        super().__init__(f"model fails structure validation: {first}")
        self.report = report


# -- ports ----------------------------------------------------------------


def ports(ref: StageRef) -> tuple:
    if ref.kind is StageKind.TRANSFER:
        return ((ref, IN), (ref, OUT))
    return ((ref, None),)


def arc_ports(source: StageRef, target: StageRef) -> tuple:
    """(source port, target port) an arc connects."""
    cross = source.machine_path != target.machine_path
    src_port = None
    dst_port = None
    if source.kind is StageKind.TRANSFER:
        src_port = OUT if cross else IN
    if target.kind is StageKind.TRANSFER:
        dst_port = IN if cross else OUT
    return (source, src_port), (target, dst_port)


def port_graph(model: Model) -> dict:
    """``port -> [(next port, arc)]`` over flow and trigger arcs, in model order."""
    out: dict = {}
    for ref in model.stages():
        for p in ports(ref):
            out[p] = []
    for arc in model.arcs:
        a, b = arc_ports(arc.source, arc.target)
        out.setdefault(a, []).append((b, arc))
        out.setdefault(b, [])
    return out


# -- simplification --------------------------------------------------------


@dataclass(frozen=True)
class ComponentGraph:
    nodes: tuple
    edges: tuple
    witnesses: dict = field(default_factory=dict, compare=False, hash=False)

    def size(self) -> int:
        return len(self.nodes) + len(self.edges)

    def to_model(self, name: str = "components") -> Model:
        """A transfer-only model whose simplification reproduces this graph."""
        flows: dict = {n: {} for n in self.nodes}
        arcs = []
        for src, dst, thing in self.edges:
            flows[src][thing] = None
            flows[dst][thing] = None
            arcs.append(
                FlowArc(
                    StageRef(src, thing, StageKind.TRANSFER),
                    StageRef(dst, thing, StageKind.TRANSFER),
                )
            )

        def build(path: tuple) -> Machine:
            children = [n for n in self.nodes if len(n) == len(path) + 1 and n[: len(path)] == path]
            return Machine(
                path[-1],
                tuple(Flow(t, {StageKind.TRANSFER}) for t in flows[path]),
                tuple(build(c) for c in children),
            )

        roots = [build(n) for n in self.nodes if len(n) == 1]
        return Model(name, tuple(roots), tuple(arcs))


def _truncate(path: tuple, depth: Optional[int]) -> tuple:
    return path if depth is None else path[:depth]


def simplify(model: Model, depth: Optional[int] = 1) -> ComponentGraph:
    """Collapse each machine (down to ``depth`` levels; ``None`` keeps all) to a node."""
    report = validate_structure(model)
    if not report.passed:
        raise InvalidModel(report)
    if depth is not None and depth < 1:
        raise ValueError("depth must be at least 1")
    nodes = [p for p, _ in model.walk() if depth is None or len(p) <= depth]
    witnesses: dict = {}
    for arc in model.flow_arcs:
        if not arc.crosses_machines:
            continue
        a = _truncate(arc.source.machine_path, depth)
        b = _truncate(arc.target.machine_path, depth)
        if a == b:
            continue
        witnesses.setdefault((a, b, arc.source.thing), []).append(arc)
    edges = sorted(witnesses, key=lambda e: (e[0], e[1], e[2]))
    return ComponentGraph(
        tuple(nodes),
        tuple(edges),
        {e: tuple(witnesses[e]) for e in edges},
    )


def size_reduction(model: Model, graph: ComponentGraph) -> float:
    """Fraction of the full diagram's size removed by simplification."""
    full = model.size()
    if full == 0:
        return 0.0
    return 1.0 - graph.size() / full


# -- induced precedence ---------------------------------------------------


@dataclass(frozen=True)
class Witness:
    arc: str
    thing: str
    reached: str

    def __str__(self) -> str:
        return f"{self.thing} via {self.arc} reaches {self.reached}"


class CyclicInduction(ValueError):
    def __init__(self, cycles: list, relation: dict) -> None:
        shown = "; ".join(" -> ".join([*c, c[0]]) for c in cycles)
        super().__init__(f"event regions feed each other: {shown}")
        self.cycles = cycles
        self.relation = relation


@dataclass(frozen=True)
class PrecedenceDag:
    nodes: tuple
    edges: tuple
    derivation: dict = field(default_factory=dict, compare=False, hash=False)

    def adjacency(self) -> dict:
        return graphs.adjacency(self.nodes, self.edges)

    def closure(self) -> set:
        return graphs.transitive_closure(self.adjacency())

    def as_chronology(self) -> Chronology:
        return Chronology(self.edges)


def _region_ports(model: Model, ev: EventDef) -> set:
    out = set()
    for element in ev.region:
        if isinstance(element, StageRef):
            out.update(ports(element))
        else:
            src, dst = element
            out.update(arc_ports(src, dst))
    return out


def induced_relation(model: Model, events: Iterable[EventDef]) -> dict:
    """Unreduced region-to-region relation: ``(Ei, Ej) -> [Witness, ...]``.

    ``Ei -> Ej`` holds when an arc leaves Ei's region and a directed path from
    it reaches Ej's region without touching any other region first.
    """
    events = list(events)
    graph = port_graph(model)
    owners: dict = {}
    region_of: dict = {}
    for ev in events:
        region = _region_ports(model, ev)
        region_of[ev.id] = region
        for p in region:
            owners.setdefault(p, []).append(ev.id)

    relation: dict = {}
    for ev in events:
        region = region_of[ev.id]
        for start in sorted(region, key=lambda p: (p[0].sort_key(), p[1] or "")):
            for nxt, arc in graph.get(start, ()):
                if nxt in region:
                    continue
                queue = deque([nxt])
                seen = {nxt}
                while queue:
                    node = queue.popleft()
                    hit = owners.get(node)
                    if hit:
                        for other in hit:
                            if other != ev.id:
                                w = Witness(str(arc), arc.source.thing, str(node[0]))
                                bucket = relation.setdefault((ev.id, other), [])
                                if w not in bucket:
                                    bucket.append(w)
                        continue
                    for follow, _ in graph.get(node, ()):
                        if follow not in seen:
                            seen.add(follow)
                            queue.append(follow)
    return relation


def induced_precedence(model: Model, events: Iterable[EventDef]) -> PrecedenceDag:
    events = list(events)
    relation = induced_relation(model, events)
    ids = sorted((ev.id for ev in events), key=natural_key)
    adj = graphs.adjacency(ids, sorted(relation, key=lambda e: (natural_key(e[0]), natural_key(e[1]))))
    cycles = graphs.find_cycles(adj)
    if cycles:
        raise CyclicInduction(cycles, relation)
    reduced = sorted(graphs.transitive_reduction(adj), key=lambda e: (natural_key(e[0]), natural_key(e[1])))
    return PrecedenceDag(
        tuple(ids),
        tuple(reduced),
        {e: tuple(relation[e]) for e in reduced},
    )


# -- declared versus induced ------------------------------------------------


class IdSetMismatch(ValueError):
    pass


@dataclass(frozen=True)
class ChronologyComparison:
    missing: tuple = ()
    contradictions: tuple = ()

    @property
    def consistent(self) -> bool:
        return not self.missing and not self.contradictions

    def render(self) -> str:
        lines = []
        for a, b in self.missing:
            lines.append(f"declared {a} -> {b} is not implied by dataflow")
        for a, b in self.contradictions:
            lines.append(f"dataflow gives {a} -> {b} but the declared order puts {b} first")
        return "\n".join(lines)


def compare_chronology(declared: Chronology, induced: PrecedenceDag) -> ChronologyComparison:
    unknown = declared.ids - set(induced.nodes)
    if unknown:
        raise IdSetMismatch(
            "declared chronology names events the induced DAG lacks: "
            + ", ".join(sorted(unknown, key=natural_key))
        )
    induced_closure = induced.closure()
    declared_adj = graphs.adjacency(induced.nodes, declared.edges)
    declared_closure = graphs.transitive_closure(declared_adj)
    missing = tuple(e for e in declared.edges if e not in induced_closure)
    contradictions = tuple((a, b) for a, b in induced.edges if (b, a) in declared_closure)
    return ChronologyComparison(missing, contradictions)
