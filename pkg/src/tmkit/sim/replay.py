"""Independent replay of a trace against its model.

Checks that steps never go backwards, each thing is born once and retired at
most once, every hop follows a flow arc, every triggered creation has a
matching trigger firing, and stages release things in the order they
received them.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..core import Model, StageRef
from .engine import COPY, CREATE, DROP, ENTER, EXIT, INJECT, JOIN, TRIGGER, TRIGGER_FIRE, Trace


@dataclass(frozen=True)
class ReplayReport:
    problems: tuple = ()

    @property
    def ok(self) -> bool:
        return not self.problems

    def __bool__(self) -> bool:
        return self.ok


def replay(model: Model, trace: Trace) -> ReplayReport:
    problems = []
    flows = {arc.pair for arc in model.flow_arcs}
    triggers = {arc.pair for arc in model.trigger_arcs}
    stages = model.stage_set

    last_step = 0
    born: dict = {}
    dropped: set = set()
    prev: dict = {}
    entered_at: dict = {}  # thing -> step of its latest ENTER
    fired = set()  # (step, thing, target stage)
    entries: dict = {}
    exits: dict = {}

    for i, rec in enumerate(trace.records):
        where = f"record {i} (step {rec.step}, thing {rec.thing})"
        if rec.step < last_step:
            problems.append(f"{where}: step went backwards from {last_step}")
        last_step = rec.step
        if rec.thing in dropped:
            problems.append(f"{where}: thing acts after being dropped")
        if rec.action != CREATE and rec.thing not in born:
            problems.append(f"{where}: {rec.action} before the thing was created")

        if rec.action == CREATE:
            if rec.thing in born:
                problems.append(f"{where}: thing created twice")
            born[rec.thing] = rec
            if rec.element not in stages:
                problems.append(f"{where}: created at unknown stage {rec.element}")
            if rec.note == TRIGGER or rec.note.startswith(JOIN):
                if (rec.step, rec.cause, rec.element) not in fired:
                    problems.append(f"{where}: triggered creation without a trigger firing from thing {rec.cause}")
            elif rec.note == COPY:
                if rec.cause not in dropped:
                    problems.append(f"{where}: copy of thing {rec.cause}, which was not split")
            elif rec.note != INJECT:
                problems.append(f"{where}: creation with unknown reason {rec.note!r}")
        elif rec.action == TRIGGER_FIRE:
            pair = tuple(rec.element)
            if pair not in triggers:
                problems.append(f"{where}: fired {pair[0]} -> {pair[1]}, which is not a trigger arc")
            here = prev.get(rec.thing)
            if here is None or here.element != pair[0]:
                problems.append(f"{where}: trigger source {pair[0]} is not where the thing was")
            elif entered_at.get(rec.thing, rec.step) >= rec.step:
                problems.append(f"{where}: trigger fired in the step its source was entered")
            fired.add((rec.step, rec.thing, pair[1]))
            continue  # does not move the thing
        elif rec.action == ENTER:
            before = prev.get(rec.thing)
            if before is None:
                problems.append(f"{where}: ENTER with no prior record")
            elif before.action == EXIT or (before.action == CREATE and before.note == COPY):
                if (before.element, rec.element) not in flows:
                    problems.append(f"{where}: hop {before.element} -> {rec.element} is not a flow arc")
            elif before.action == CREATE:
                if before.element != rec.element:
                    problems.append(f"{where}: entered {rec.element} but was created at {before.element}")
            else:
                problems.append(f"{where}: ENTER follows {before.action}")
            entered_at[rec.thing] = rec.step
            entries.setdefault((rec.element, rec.element.thing), []).append(rec.thing)
        elif rec.action in (EXIT, DROP):
            before = prev.get(rec.thing)
            if before is None or before.action != ENTER or before.element != rec.element:
                if not (rec.action == DROP and before is not None and before.element == rec.element):
                    problems.append(f"{where}: {rec.action} from {rec.element} without entering it")
            if entered_at.get(rec.thing, -1) >= rec.step:
                problems.append(f"{where}: left {rec.element} in the step it entered")
            if rec.action == DROP:
                dropped.add(rec.thing)
            if isinstance(rec.element, StageRef):
                exits.setdefault((rec.element, rec.element.thing), []).append(rec.thing)
        else:
            problems.append(f"{where}: unknown action {rec.action!r}")
        prev[rec.thing] = rec

    for key, left in exits.items():
        came = entries.get(key, [])
        if came[: len(left)] != left:
            problems.append(f"stage {key[0]} did not release things in arrival order")
    return ReplayReport(tuple(problems))
