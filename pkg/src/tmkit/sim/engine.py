"""Deterministic token-flow simulation.

Time is a global integer step.  A thing that enters a stage at step ``s``
leaves it at step ``s + 1`` at the earliest; within a step, things leave in
the order they entered.  Injections scheduled for a step are applied after
the things already in flight have moved.

At a Transfer stage the direction a thing travels depends on how it got
there: arriving from another machine it continues inward (Transfer ->
Receive), arriving from its own machine's Release it leaves outward.  An
injected thing may take any outgoing arc.

When a stage offers several outgoing arcs (fan-out at Release or Transfer)
the thing is retired and one copy per branch is created, each with a fresh
id and a ``parent`` attribute.

A trigger with one incoming arc creates its target thing immediately.  A
target fed by several triggers waits until every arc has delivered at least
one contribution (an AND-join), then creates a single thing whose attributes
merge the contributions.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Union

from ..core import (
    Chronology,
    EventDef,
    Model,
    StageKind,
    StageRef,
    element_str,
    natural_key,
)
from ..transform import InvalidModel
from ..validate import validate_structure
from .expr import GuardError, evaluate
from .scenario import FIRE, Scenario

ENTER = "ENTER"
EXIT = "EXIT"
TRIGGER_FIRE = "TRIGGER-FIRE"
CREATE = "CREATE"
DROP = "DROP"
ACTIONS = (ENTER, EXIT, TRIGGER_FIRE, CREATE, DROP)

# reasons recorded in the note field
INJECT = "inject"
TRIGGER = "trigger"
JOIN = "join"
COPY = "copy"
SINK = "sink"
SPLIT = "split"
SUPPRESSED = "suppressed"

# direction of a thing sitting on a Transfer stage
_IN = "in"
_OUT = "out"
_ANY = "any"


class SimulationError(RuntimeError):
    pass


class AmbiguousFlow(SimulationError):
    def __init__(self, stage: StageRef, arcs: list) -> None:
        targets = ", ".join(str(a.target) for a in arcs)
        super().__init__(
            f"{stage} has {len(arcs)} outgoing flow arcs ({targets}) and no guard can choose between them"
        )
        self.stage = stage
        self.arcs = tuple(arcs)


class GuardFailure(SimulationError):
    def __init__(self, stage: StageRef, thing_id: int, cause: GuardError) -> None:
        super().__init__(f"guard at {stage} on thing {thing_id}: {cause}")
        self.stage = stage
        self.thing_id = thing_id


@dataclass(frozen=True)
class Thing:
    id: int
    kind: str
    attributes: dict = field(hash=False)
    birth_step: int


@dataclass(frozen=True)
class TraceRecord:
    step: int
    thing: int
    element: object  # StageRef, or (source, target) for TRIGGER-FIRE
    action: str
    cause: Optional[int] = None
    note: str = ""

    def __str__(self) -> str:
        extra = f" cause={self.cause}" if self.cause is not None else ""
        note = f" [{self.note}]" if self.note else ""
        return f"{self.step:>4} #{self.thing:<4} {self.action:<12} {element_str(self.element)}{extra}{note}"


@dataclass(frozen=True)
class Trace:
    records: tuple = ()
    things: tuple = ()
    event_firings: tuple = ()
    refirings: dict = field(default_factory=dict, hash=False)
    steps: int = 0
    halted: str = "quiescent"

    def __len__(self) -> int:
        return len(self.records)

    def thing(self, thing_id: int) -> Thing:
        for t in self.things:
            if t.id == thing_id:
                return t
        raise KeyError(thing_id)

    def created(self, kind: Optional[str] = None) -> list:
        return [r for r in self.records if r.action == CREATE and (kind is None or r.element.thing == kind)]

    def render(self) -> str:
        return "\n".join(str(r) for r in self.records)


# -- engine ---------------------------------------------------------------


@dataclass
class _Slot:
    seq: int
    thing: Thing
    stage: StageRef
    entered: int
    direction: Optional[str] = None


def _check_ambiguity(model: Model) -> None:
    for ref in model.stages():
        if ref.kind in (StageKind.CREATE, StageKind.RECEIVE, StageKind.PROCESS):
            arcs = model.flow_out(ref)
            if len(arcs) > 1:
                raise AmbiguousFlow(ref, arcs)


class _Run:
    def __init__(self, model: Model, scenario: Scenario) -> None:
        self.model = model
        self.scenario = scenario
        self.records: list = []
        self.things: list = []
        self.flight: list = []
        self.seq = 0
        self.pending: dict = {}
        self.fire_guards: dict = {}
        self.suppress_guards: dict = {}
        for g in scenario.guards:
            if g.mode == FIRE:
                self.fire_guards.setdefault(g.trigger, []).append(g)
            else:
                self.suppress_guards.setdefault(g.at, []).append(g)

    def new_thing(self, kind: str, attrs: Mapping, step: int) -> Thing:
        t = Thing(len(self.things) + 1, kind, dict(attrs), step)
        self.things.append(t)
        return t

    def record(self, step, thing, element, action, cause=None, note="") -> None:
        self.records.append(TraceRecord(step, thing.id, element, action, cause, note))

    def enter(self, thing: Thing, stage: StageRef, step: int, direction: Optional[str]) -> None:
        self.record(step, thing, stage, ENTER)
        self.seq += 1
        if stage.kind is not StageKind.TRANSFER:
            direction = None
        self.flight.append(_Slot(self.seq, thing, stage, step, direction))

    def guard_ok(self, guards: list, stage: StageRef, thing: Thing) -> bool:
        try:
            return all(evaluate(g.condition, thing.attributes) for g in guards)
        except GuardError as exc:
            raise GuardFailure(stage, thing.id, exc) from None

    def candidates(self, slot: _Slot) -> list:
        arcs = self.model.flow_out(slot.stage)
        if slot.direction == _IN:
            return [a for a in arcs if not a.crosses_machines]
        if slot.direction == _OUT:
            return [a for a in arcs if a.crosses_machines]
        return list(arcs)

    def move(self, slot: _Slot, step: int) -> None:
        thing, stage = slot.thing, slot.stage
        if not self.guard_ok(self.suppress_guards.get(stage, []), stage, thing):
            self.record(step, thing, stage, DROP, note=SUPPRESSED)
            return
        self.fire_triggers(thing, stage, step)
        arcs = self.candidates(slot)
        if not arcs:
            self.record(step, thing, stage, DROP, note=SINK)
        elif len(arcs) == 1:
            arc = arcs[0]
            self.record(step, thing, stage, EXIT)
            self.enter(thing, arc.target, step, _IN if arc.crosses_machines else _OUT)
        else:
            self.record(step, thing, stage, DROP, note=SPLIT)
            for arc in arcs:
                attrs = dict(thing.attributes)
                attrs["parent"] = thing.id
                copy = self.new_thing(thing.kind, attrs, step)
                self.record(step, copy, stage, CREATE, cause=thing.id, note=COPY)
                self.enter(copy, arc.target, step, _IN if arc.crosses_machines else _OUT)

    def fire_triggers(self, thing: Thing, stage: StageRef, step: int) -> None:
        for trig in self.model.triggers_out(stage):
            if not self.guard_ok(self.fire_guards.get(trig, []), stage, thing):
                continue
            self.record(step, thing, trig.pair, TRIGGER_FIRE)
            incoming = self.model.triggers_in(trig.target)
            if len(incoming) == 1:
                born = self.new_thing(trig.target.thing, thing.attributes, step)
                self.record(step, born, trig.target, CREATE, cause=thing.id, note=TRIGGER)
                self.enter(born, trig.target, step, None)
                continue
            queues = self.pending.setdefault(
                trig.target, {a: deque() for a in sorted(incoming, key=lambda a: a.source.sort_key())}
            )
            queues[trig].append(thing)
            if all(queues.values()):
                parts = [q.popleft() for q in queues.values()]
                attrs: dict = {}
                for part in parts:
                    for k, v in part.attributes.items():
                        attrs.setdefault(k, v)
                born = self.new_thing(trig.target.thing, attrs, step)
                note = JOIN + ":" + ",".join(str(p.id) for p in parts)
                self.record(step, born, trig.target, CREATE, cause=thing.id, note=note)
                self.enter(born, trig.target, step, None)

    def run(self) -> Trace:
        injections = sorted(
            enumerate(self.scenario.injections), key=lambda pair: (pair[1].step, pair[0])
        )
        queue = deque(inj for _, inj in injections)
        step = 0
        halted = "quiescent"
        while True:
            if step >= self.scenario.max_steps:
                if self.flight or queue:
                    halted = "max_steps"
                break
            if not self.flight and not queue:
                break
            movers = [s for s in self.flight if s.entered < step]
            self.flight = [s for s in self.flight if s.entered >= step]
            for slot in movers:
                self.move(slot, step)
            while queue and queue[0].step <= step:
                inj = queue.popleft()
                thing = self.new_thing(inj.thing, inj.attributes, step)
                self.record(step, thing, inj.at, CREATE, note=INJECT)
                self.enter(thing, inj.at, step, _ANY)
            step += 1
        return Trace(tuple(self.records), tuple(self.things), steps=step, halted=halted)


def run(model: Model, scenario: Scenario, events: Optional[Iterable[EventDef]] = None) -> Trace:
    """Simulate ``scenario`` on ``model``; with ``events``, also record their firings."""
    report = validate_structure(model)
    if not report.passed:
        raise InvalidModel(report)
    _check_ambiguity(model)
    trace = _Run(model, scenario).run()
    if events is None:
        return trace
    all_firings = event_firings(trace, events)
    first = _first_firings(all_firings)
    refire = {k: tuple(v[1:]) for k, v in all_firings.items() if len(v) > 1}
    return Trace(trace.records, trace.things, tuple(first), refire, trace.steps, trace.halted)


# -- events ---------------------------------------------------------------


def activations(trace: Trace):
    """Yield ``(step, element)`` for every stage entered and arc traversed."""
    last: dict = {}
    for rec in trace.records:
        if rec.action == TRIGGER_FIRE:
            yield rec.step, tuple(rec.element)
            continue
        if rec.action == ENTER:
            prev = last.get(rec.thing)
            if prev is not None and prev.action in (EXIT, CREATE) and prev.element != rec.element:
                yield rec.step, (prev.element, rec.element)
            yield rec.step, rec.element
        last[rec.thing] = rec


def event_firings(trace: Trace, events: Iterable[EventDef]) -> dict:
    """Every step at which each event's region became fully activated.

    After a firing the event starts collecting again, so a second complete
    activation counts as a re-firing.
    """
    events = list(events)
    needed = {ev.id: frozenset(tuple(e) if not isinstance(e, StageRef) else e for e in ev.region) for ev in events}
    seen = {ev.id: set() for ev in events}
    fired: dict = {ev.id: [] for ev in events}
    watchers: dict = {}
    for ev_id, elements in needed.items():
        for e in elements:
            watchers.setdefault(e, []).append(ev_id)

    def close(step: int) -> None:
        for ev in events:
            region = needed[ev.id]
            if region and seen[ev.id] >= region:
                fired[ev.id].append(step)
                seen[ev.id] = set()

    current = None
    for step, element in activations(trace):
        if current is not None and step != current:
            close(current)
        current = step
        for ev_id in watchers.get(element, ()):
            seen[ev_id].add(element)
    if current is not None:
        close(current)
    return {k: v for k, v in fired.items() if v}


def _first_firings(all_firings: dict) -> list:
    return sorted(((k, v[0]) for k, v in all_firings.items()), key=lambda p: (p[1], natural_key(p[0])))


def detect_events(trace: Trace, events: Iterable[EventDef]) -> list:
    """``[(event id, first firing step)]`` ordered by step, then id."""
    return _first_firings(event_firings(trace, events))


@dataclass(frozen=True)
class OrderCheck:
    passed: bool
    pair: Optional[tuple] = None
    steps: Optional[tuple] = None

    def __bool__(self) -> bool:
        return self.passed

    def __str__(self) -> str:
        if self.passed:
            return "chronology respected"
        (a, b), (sa, sb) = self.pair, self.steps
        return f"{a} must precede {b}, but {a} fired at step {sa} and {b} at step {sb}"


def check_order(firings: Union[Mapping, Iterable], chron: Chronology) -> OrderCheck:
    """Pass when no declared edge ``a -> b`` has ``b`` firing strictly before ``a``.

    Events that never fired are ignored; simultaneous firings are allowed.
    """
    steps = dict(firings.items() if isinstance(firings, Mapping) else firings)
    for a, b in chron.edges:
        if a in steps and b in steps and steps[b] < steps[a]:
            return OrderCheck(False, (a, b), (steps[a], steps[b]))
    return OrderCheck(True)
