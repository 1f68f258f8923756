"""In-memory representation of thinging-machine models.

A model is a forest of machines.  Each machine declares, per thing kind, the
subset of the five stages it applies to that thing.  Flow arcs move a thing
between stages without changing its kind; trigger arcs start a new flow,
possibly of a different kind.  All values are frozen once built.
"""

from __future__ import annotations

import enum
import functools
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator, Optional, Union

__all__ = [
    "StageKind",
    "Flow",
    "Machine",
    "StageRef",
    "FlowArc",
    "TriggerArc",
    "Arc",
    "ArcRef",
    "Element",
    "EventDef",
    "Chronology",
    "Model",
    "StageHandle",
    "Subgraph",
    "ResolveError",
    "UnknownMachinePath",
    "UnknownThing",
    "StageNotDeclared",
    "ElementNotInModel",
    "resolve",
    "region_subgraph",
    "natural_key",
]


class StageKind(enum.Enum):
    CREATE = "create"
    PROCESS = "process"
    RELEASE = "release"
    RECEIVE = "receive"
    TRANSFER = "transfer"

    @property
    def order(self) -> int:
        return _KIND_ORDER[self]

    @property
    def title(self) -> str:
        return self.value.capitalize()

    @classmethod
    def parse(cls, text: str) -> "StageKind":
        try:
            return cls(text)
        except ValueError:
            raise ValueError(f"unknown stage kind {text!r}") from None


_KIND_ORDER = {kind: i for i, kind in enumerate(StageKind)}


def natural_key(text: str) -> tuple:
    """Sort key that orders ``E2`` before ``E10``."""
    parts: list = []
    digits = ""
    chars = ""
    for ch in text:
        if ch.isdigit():
            if chars:
                parts.append((1, chars, 0))
                chars = ""
            digits += ch
        else:
            if digits:
                parts.append((0, "", int(digits)))
                digits = ""
            chars += ch
    if digits:
        parts.append((0, "", int(digits)))
    if chars:
        parts.append((1, chars, 0))
    return tuple(parts)


@dataclass(frozen=True)
class Flow:
    thing: str
    stages: frozenset

    def __post_init__(self) -> None:
        if not self.thing:
            raise ValueError("thing kind must be a non-empty name")
        object.__setattr__(self, "stages", frozenset(self.stages))
        if not self.stages:
            raise ValueError(f"flow of {self.thing!r} declares no stages")

    def ordered_stages(self) -> list[StageKind]:
        return sorted(self.stages, key=lambda k: k.order)


@dataclass(frozen=True)
class Machine:
    name: str
    flows: tuple = ()
    submachines: tuple = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "flows", tuple(self.flows))
        object.__setattr__(self, "submachines", tuple(self.submachines))
        things = [f.thing for f in self.flows]
        if len(set(things)) != len(things):
            raise ValueError(f"machine {self.name!r} declares a thing kind twice")
        names = [m.name for m in self.submachines]
        if len(set(names)) != len(names):
            raise ValueError(f"machine {self.name!r} has duplicate submachine names")

    def flow(self, thing: str) -> Optional[Flow]:
        for f in self.flows:
            if f.thing == thing:
                return f
        return None

    def submachine(self, name: str) -> Optional["Machine"]:
        for m in self.submachines:
            if m.name == name:
                return m
        return None


@functools.total_ordering
@dataclass(frozen=True)
class StageRef:
    machine_path: tuple
    thing: str
    kind: StageKind

    def __post_init__(self) -> None:
        object.__setattr__(self, "machine_path", tuple(self.machine_path))

    def __lt__(self, other: "StageRef") -> bool:
        if not isinstance(other, StageRef):
            return NotImplemented
        return self.sort_key() < other.sort_key()

    def sort_key(self) -> tuple:
        return (self.machine_path, self.thing, self.kind.order)

    @property
    def machine(self) -> str:
        return ".".join(self.machine_path)

    def __str__(self) -> str:
        return ".".join((*self.machine_path, self.thing, self.kind.value))

    @classmethod
    def parse(cls, text: str) -> "StageRef":
        parts = text.strip().split(".")
        if len(parts) < 3 or not all(parts):
            raise ValueError(f"malformed stage reference {text!r}")
        return cls(tuple(parts[:-2]), parts[-2], StageKind.parse(parts[-1]))


@dataclass(frozen=True)
class FlowArc:
    source: StageRef
    target: StageRef
    paper_anchor: Optional[int] = None

    def __post_init__(self) -> None:
        if self.source == self.target:
            raise ValueError(f"flow arc from {self.source} to itself")
        if self.source.thing != self.target.thing:
            raise ValueError(
                f"flow arc {self.source} -> {self.target} changes thing kind; "
                "use a trigger"
            )

    @property
    def pair(self) -> tuple[StageRef, StageRef]:
        return (self.source, self.target)

    @property
    def crosses_machines(self) -> bool:
        return self.source.machine_path != self.target.machine_path

    def __str__(self) -> str:
        return f"{self.source} -> {self.target}"


@dataclass(frozen=True)
class TriggerArc:
    source: StageRef
    target: StageRef
    paper_anchor: Optional[int] = None
    name: Optional[str] = None

    def __post_init__(self) -> None:
        if self.source == self.target:
            raise ValueError(f"trigger arc from {self.source} to itself")

    @property
    def pair(self) -> tuple[StageRef, StageRef]:
        return (self.source, self.target)

    @property
    def crosses_machines(self) -> bool:
        return self.source.machine_path != self.target.machine_path

    def __str__(self) -> str:
        return f"{self.source} -> {self.target}"


Arc = Union[FlowArc, TriggerArc]
ArcRef = tuple  # (StageRef, StageRef)
Element = Union[StageRef, ArcRef]


def element_str(element: Element) -> str:
    if isinstance(element, StageRef):
        return str(element)
    src, dst = element
    return f"({src} -> {dst})"


def element_sort_key(element: Element) -> tuple:
    if isinstance(element, StageRef):
        return (0, element.sort_key(), ())
    src, dst = element
    return (1, src.sort_key(), dst.sort_key())


@dataclass(frozen=True)
class EventDef:
    id: str
    label: str
    region: tuple = ()
    time_slot: Optional[int] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "region", tuple(self.region))


@dataclass(frozen=True)
class Chronology:
    """Declared precedence over event ids, kept as a sorted, deduplicated edge tuple."""

    edges: tuple = ()

    def __post_init__(self) -> None:
        uniq = {(a, b) for a, b in self.edges}
        ordered = sorted(uniq, key=lambda e: (natural_key(e[0]), natural_key(e[1])))
        object.__setattr__(self, "edges", tuple(ordered))

    @property
    def ids(self) -> set[str]:
        return {x for edge in self.edges for x in edge}

    def predecessors(self, event_id: str) -> list[str]:
        return sorted((a for a, b in self.edges if b == event_id), key=natural_key)

    def __len__(self) -> int:
        return len(self.edges)


@dataclass(frozen=True)
class StageHandle:
    machine: Machine
    machine_path: tuple
    thing: str
    kind: StageKind

    @property
    def ref(self) -> StageRef:
        return StageRef(self.machine_path, self.thing, self.kind)


class ResolveError(LookupError):
    def __init__(self, ref: object, message: str) -> None:
        super().__init__(message)
        self.ref = ref


class UnknownMachinePath(ResolveError):
    pass


class UnknownThing(ResolveError):
    pass


class StageNotDeclared(ResolveError):
    pass


class ElementNotInModel(LookupError):
    def __init__(self, element: object) -> None:
        text = element_str(element) if _is_element(element) else repr(element)
        super().__init__(f"element not in model: {text}")
        self.element = element


def _is_element(obj: object) -> bool:
    if isinstance(obj, StageRef):
        return True
    return (
        isinstance(obj, tuple)
        and len(obj) == 2
        and all(isinstance(x, StageRef) for x in obj)
    )


@dataclass(frozen=True)
class Model:
    name: str
    root_machines: tuple = ()
    flow_arcs: tuple = ()
    trigger_arcs: tuple = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "root_machines", tuple(self.root_machines))
        object.__setattr__(self, "flow_arcs", tuple(self.flow_arcs))
        object.__setattr__(self, "trigger_arcs", tuple(self.trigger_arcs))
        names = [m.name for m in self.root_machines]
        if len(set(names)) != len(names):
            raise ValueError("duplicate root machine names")
        for arcs in (self.flow_arcs, self.trigger_arcs):
            anchors = [a.paper_anchor for a in arcs if a.paper_anchor is not None]
            if len(set(anchors)) != len(anchors):
                raise ValueError("arc anchors must be unique within an arc list")

    # -- traversal -------------------------------------------------------

    def walk(self) -> Iterator[tuple[tuple, Machine]]:
        """Yield ``(path, machine)`` depth-first in declaration order."""
        stack = [((m.name,), m) for m in reversed(self.root_machines)]
        while stack:
            path, machine = stack.pop()
            yield path, machine
            for sub in reversed(machine.submachines):
                stack.append(((*path, sub.name), sub))

    @cached_property
    def machines(self) -> dict:
        return dict(self.walk())

    @cached_property
    def thing_kinds(self) -> frozenset:
        return frozenset(f.thing for _, m in self.walk() for f in m.flows)

    def stages(self) -> Iterator[StageRef]:
        for path, machine in self.walk():
            for flow in machine.flows:
                for kind in flow.ordered_stages():
                    yield StageRef(path, flow.thing, kind)

    @cached_property
    def stage_set(self) -> frozenset:
        return frozenset(self.stages())

    @property
    def arcs(self) -> tuple:
        return self.flow_arcs + self.trigger_arcs

    @cached_property
    def arcs_by_pair(self) -> dict:
        index: dict = {}
        for arc in self.arcs:
            index.setdefault(arc.pair, []).append(arc)
        return index

    @cached_property
    def triggers_by_name(self) -> dict:
        return {t.name: t for t in self.trigger_arcs if t.name}

    def flow_out(self, ref: StageRef) -> list[FlowArc]:
        return self._flow_out.get(ref, [])

    def triggers_out(self, ref: StageRef) -> list[TriggerArc]:
        return self._trig_out.get(ref, [])

    def triggers_in(self, ref: StageRef) -> list[TriggerArc]:
        return self._trig_in.get(ref, [])

    @cached_property
    def _flow_out(self) -> dict:
        out: dict = {}
        for arc in self.flow_arcs:
            out.setdefault(arc.source, []).append(arc)
        return out

    @cached_property
    def _trig_out(self) -> dict:
        out: dict = {}
        for arc in self.trigger_arcs:
            out.setdefault(arc.source, []).append(arc)
        return out

    @cached_property
    def _trig_in(self) -> dict:
        out: dict = {}
        for arc in self.trigger_arcs:
            out.setdefault(arc.target, []).append(arc)
        return out

    def size(self) -> int:
        """Stage count plus arc count."""
        return len(self.stage_set) + len(self.flow_arcs) + len(self.trigger_arcs)

    def dangling_refs(self) -> list[StageRef]:
        bad = []
        for arc in self.arcs:
            for ref in arc.pair:
                if ref not in self.stage_set and ref not in bad:
                    bad.append(ref)
        return bad


def resolve(model: Model, ref: StageRef) -> StageHandle:
    machine = model.machines.get(tuple(ref.machine_path))
    if machine is None:
        raise UnknownMachinePath(ref, f"no machine at path {ref.machine or '<empty>'!r}")
    flow = machine.flow(ref.thing)
    if flow is None:
        if ref.thing not in model.thing_kinds:
            raise UnknownThing(ref, f"thing kind {ref.thing!r} is not declared anywhere")
        raise StageNotDeclared(
            ref, f"machine {ref.machine!r} declares no flow of {ref.thing!r}"
        )
    if ref.kind not in flow.stages:
        raise StageNotDeclared(
            ref,
            f"machine {ref.machine!r} has no {ref.kind.value} stage for {ref.thing!r}",
        )
    return StageHandle(machine, tuple(ref.machine_path), ref.thing, ref.kind)


@dataclass(frozen=True)
class Subgraph:
    stages: frozenset = frozenset()
    arcs: frozenset = frozenset()

    def __or__(self, other: "Subgraph") -> "Subgraph":
        return Subgraph(self.stages | other.stages, self.arcs | other.arcs)

    @property
    def nodes(self) -> frozenset:
        """Named stages together with the endpoints of named arcs."""
        ends = {ref for arc in self.arcs for ref in arc.pair}
        return self.stages | ends

    def __len__(self) -> int:
        return len(self.stages) + len(self.arcs)


def region_subgraph(model: Model, elements: Iterable[Element]) -> Subgraph:
    stages = set()
    arcs = set()
    for element in elements:
        if isinstance(element, StageRef):
            if element not in model.stage_set:
                raise ElementNotInModel(element)
            stages.add(element)
        elif _is_element(element):
            found = model.arcs_by_pair.get(tuple(element))
            if not found:
                raise ElementNotInModel(element)
            arcs.update(found)
        else:
            raise ElementNotInModel(element)
    return Subgraph(frozenset(stages), frozenset(arcs))
