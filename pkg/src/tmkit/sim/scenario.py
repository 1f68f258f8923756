"""Line-oriented scenario files.

    maxsteps 500
    inject @0  Vehicle.SpeedReading.create        speed=130
    inject @0  Satellites.NavData.transfer        sat=1
    guard  TrackingSystem.SpeedReading.process  when speed > 120  fire trig_speed_alert
    guard  Depot.Parcel.process  when weight < 30  suppress

``fire`` names a trigger arc by its ``as`` name or by its target stage; the
trigger then fires only when the condition holds.  ``suppress`` stops the
thing's onward flow when the condition is false.  ``#`` starts a comment.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from ..core import Model, ResolveError, StageKind, StageRef, TriggerArc, resolve
from .expr import ExprSyntaxError, parse_expr

DEFAULT_MAX_STEPS = 1000

FIRE = "fire"
SUPPRESS = "suppress"


class ScenarioError(ValueError):
    def __init__(self, message: str, line: int = 0, column: int = 0) -> None:
        where = f"{line}:{column}: " if line else ""
        super().__init__(f"{where}{message}")
        self.line = line
        self.column = column
        self.message = message


class UnresolvedRef(ScenarioError):
    pass


@dataclass(frozen=True)
class Injection:
    step: int
    at: StageRef
    attributes: dict = field(default_factory=dict, hash=False)

    @property
    def thing(self) -> str:
        return self.at.thing


@dataclass(frozen=True)
class GuardRule:
    at: StageRef
    condition: object
    mode: str = FIRE
    trigger: Optional[TriggerArc] = None

    def __str__(self) -> str:
        if self.mode == FIRE:
            target = self.trigger.name or str(self.trigger.target)
            return f"guard {self.at} when {self.condition} fire {target}"
        return f"guard {self.at} when {self.condition} suppress"


@dataclass(frozen=True)
class Scenario:
    injections: tuple = ()
    guards: tuple = ()
    max_steps: int = DEFAULT_MAX_STEPS

    def __post_init__(self) -> None:
        if self.max_steps < 0:
            raise ValueError("max_steps must not be negative")

    def with_max_steps(self, max_steps: int) -> "Scenario":
        return Scenario(self.injections, self.guards, max_steps)

    def without(self, machine: str) -> "Scenario":
        """Drop injections and guards located in ``machine`` (a root machine name)."""
        return Scenario(
            tuple(i for i in self.injections if i.at.machine_path[0] != machine),
            tuple(g for g in self.guards if g.at.machine_path[0] != machine),
            self.max_steps,
        )


def format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        if re.fullmatch(r"[A-Za-z_][\w.\-]*", value) and value not in ("true", "false"):
            return value
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    return repr(value)


def dump_scenario(scenario: Scenario) -> str:
    lines = [f"maxsteps {scenario.max_steps}"]
    for inj in scenario.injections:
        attrs = " ".join(f"{k}={format_value(v)}" for k, v in inj.attributes.items())
        lines.append(f"inject @{inj.step} {inj.at}" + (f" {attrs}" if attrs else ""))
    lines.extend(str(g) for g in scenario.guards)
    return "\n".join(lines) + "\n"


_ATTR_RE = re.compile(r'\s*([A-Za-z_][A-Za-z0-9_]*)=("(?:[^"\\]|\\.)*"|[^\s"]+)')
_INJECT_RE = re.compile(r"inject\s+@(?P<step>\S+)\s+(?P<ref>\S+)(?P<attrs>.*)$")
_GUARD_RE = re.compile(
    r"guard\s+(?P<ref>\S+)\s+when\s+(?P<cond>.+?)\s+(?:(?P<fire>fire)\s+(?P<target>\S+)|(?P<suppress>suppress))\s*$"
)
_MAXSTEPS_RE = re.compile(r"maxsteps\s+(?P<n>\S+)\s*$")


def parse_value(text: str):
    if text.startswith('"'):
        return re.sub(r"\\(.)", r"\1", text[1:-1])
    if text == "true":
        return True
    if text == "false":
        return False
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def _strip_comment(line: str) -> str:
    quoted = False
    escaped = False
    for i, ch in enumerate(line):
        if escaped:
            escaped = False
        elif ch == "\\":
            escaped = True
        elif ch == '"':
            quoted = not quoted
        elif ch == "#" and not quoted:
            return line[:i]
    return line


def _resolve_ref(model: Model, text: str, lineno: int, col: int) -> StageRef:
    try:
        ref = StageRef.parse(text)
    except ValueError as exc:
        raise ScenarioError(str(exc), lineno, col) from None
    try:
        resolve(model, ref)
    except ResolveError as exc:
        raise UnresolvedRef(str(exc), lineno, col) from None
    return ref


def _find_trigger(model: Model, at: StageRef, target: str, lineno: int, col: int) -> TriggerArc:
    trig = model.triggers_by_name.get(target)
    if trig is None and "." in target:
        try:
            dst = StageRef.parse(target)
        except ValueError:
            dst = None
        for cand in model.triggers_out(at):
            if cand.target == dst:
                trig = cand
                break
        if trig is None:
            raise UnresolvedRef(f"no trigger from {at} to {target}", lineno, col)
    if trig is None:
        raise UnresolvedRef(f"no trigger named {target!r}", lineno, col)
    if trig.source != at:
        raise UnresolvedRef(f"trigger {target!r} starts at {trig.source}, not {at}", lineno, col)
    return trig


def load_scenario(text: str, model: Model) -> Scenario:
    injections = []
    guards = []
    max_steps = DEFAULT_MAX_STEPS
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw)
        body = line.strip()
        if not body:
            continue
        indent = len(line) - len(line.lstrip())
        col = indent + 1
        keyword = body.split(None, 1)[0]
        if keyword == "maxsteps":
            m = _MAXSTEPS_RE.match(body)
            if not m or not m.group("n").isdigit():
                raise ScenarioError("maxsteps needs a non-negative integer", lineno, col)
            max_steps = int(m.group("n"))
        elif keyword == "inject":
            m = _INJECT_RE.match(body)
            if not m:
                raise ScenarioError("expected: inject @STEP MACHINE...THING.STAGE [name=value ...]", lineno, col)
            if not m.group("step").isdigit():
                raise ScenarioError("injection step must be a non-negative integer", lineno, col + m.start("step"))
            ref_col = col + m.start("ref")
            ref = _resolve_ref(model, m.group("ref"), lineno, ref_col)
            if ref.kind not in (StageKind.CREATE, StageKind.TRANSFER):
                raise ScenarioError(
                    f"things can only be injected at create or transfer stages, not {ref.kind.value}",
                    lineno,
                    ref_col,
                )
            attrs = {}
            rest = m.group("attrs")
            pos = 0
            while pos < len(rest):
                if not rest[pos:].strip():
                    break
                am = _ATTR_RE.match(rest, pos)
                if not am:
                    raise ScenarioError(
                        "expected name=value attribute", lineno, col + m.start("attrs") + pos + 1
                    )
                attrs[am.group(1)] = parse_value(am.group(2))
                pos = am.end()
            injections.append(Injection(int(m.group("step")), ref, attrs))
        elif keyword == "guard":
            m = _GUARD_RE.match(body)
            if not m:
                raise ScenarioError(
                    "expected: guard MACHINE...THING.process when CONDITION (fire TRIGGER | suppress)",
                    lineno,
                    col,
                )
            ref_col = col + m.start("ref")
            at = _resolve_ref(model, m.group("ref"), lineno, ref_col)
            if at.kind is not StageKind.PROCESS:
                raise ScenarioError("guards sit on process stages", lineno, ref_col)
            try:
                cond = parse_expr(m.group("cond"))
            except ExprSyntaxError as exc:
                raise ScenarioError(str(exc), lineno, col + m.start("cond") + exc.offset) from None
            if m.group("fire"):
                trig = _find_trigger(model, at, m.group("target"), lineno, col + m.start("target"))
                guards.append(GuardRule(at, cond, FIRE, trig))
            else:
                guards.append(GuardRule(at, cond, SUPPRESS, None))
        else:
            raise ScenarioError(f"unknown directive {keyword!r}", lineno, col)
    return Scenario(tuple(injections), tuple(guards), max_steps)
