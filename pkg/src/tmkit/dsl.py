"""Textual ``.tm`` bundles: a model, its events and their declared chronology.

    model "Name" {
      machine Vehicle {
        flow SpeedReading { create, release, transfer }
      }
      arc Vehicle.SpeedReading.create -> Vehicle.SpeedReading.release @1
      trigger A.X.process -> A.Y.create @11 as make_y
      event E1 "Label" region { Vehicle.SpeedReading.create, (a -> b) } slot 2
      chronology { E1 -> E2; }
    }

``parse`` raises :class:`TMSyntaxError` carrying every error diagnostic;
warnings travel on the returned bundle.  ``serialize`` emits the canonical
form, which is a fixpoint of ``serialize(parse(.))``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterator, Optional

from .core import (
    Chronology,
    EventDef,
    Flow,
    FlowArc,
    Machine,
    Model,
    ResolveError,
    StageKind,
    StageNotDeclared,
    StageRef,
    TriggerArc,
    UnknownMachinePath,
    UnknownThing,
    element_str,
    natural_key,
    resolve,
)

__all__ = [
    "Diagnostic",
    "ParsedBundle",
    "TMSyntaxError",
    "DanglingReference",
    "parse",
    "serialize",
    "structurally_equal",
]

ERROR = "ERROR"
WARNING = "WARNING"


@dataclass(frozen=True)
class Diagnostic:
    severity: str
    line: int
    column: int
    message: str
    code: str

    def __str__(self) -> str:
        return f"{self.line}:{self.column}: {self.severity.lower()}[{self.code}]: {self.message}"


class TMSyntaxError(ValueError):
    def __init__(self, diagnostics: list[Diagnostic]) -> None:
        self.diagnostics = list(diagnostics)
        first = self.diagnostics[0] if self.diagnostics else None
        super().__init__(str(first) if first else "parse failed")


class DanglingReference(ValueError):
    def __init__(self, ref: StageRef) -> None:
        super().__init__(f"reference does not resolve: {ref}")
        self.ref = ref


@dataclass(frozen=True)
class ParsedBundle:
    model: Model
    events: tuple = ()
    chronology: Chronology = field(default_factory=Chronology)
    diagnostics: tuple = ()

    def structure(self) -> tuple:
        """Everything that survives a serialize/parse round trip, in canonical order."""
        m = self.model
        return (
            m.name,
            m.root_machines,
            tuple(sorted(m.flow_arcs, key=_arc_key)),
            tuple(sorted(m.trigger_arcs, key=_arc_key)),
            tuple(sorted(self.events, key=lambda e: natural_key(e.id))),
            self.chronology,
        )

    def event(self, event_id: str) -> EventDef:
        for ev in self.events:
            if ev.id == event_id:
                return ev
        raise KeyError(event_id)


def structurally_equal(a: ParsedBundle, b: ParsedBundle) -> bool:
    return a.structure() == b.structure()


# -- lexing -------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>//[^\n]*)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<int>[0-9]+)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<arrow>->)
  | (?P<punct>[{}(),.;@])
    """,
    re.VERBOSE,
)

_ESCAPES = {"n": "\n", "t": "\t", '"': '"', "\\": "\\"}


@dataclass(frozen=True)
class Token:
    type: str
    text: str
    line: int
    column: int

    @property
    def value(self) -> str:
        if self.type != "string":
            return self.text
        return re.sub(r"\\(.)", lambda m: _ESCAPES.get(m.group(1), m.group(1)), self.text[1:-1])


class _Abort(Exception):
    def __init__(self, diagnostic: Diagnostic) -> None:
        self.diagnostic = diagnostic


def _tokens(text: str) -> Iterator[Token]:
    pos = 0
    line = 1
    line_start = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        column = pos - line_start + 1
        if m is None:
            ch = text[pos]
            if ch == '"':
                msg = "unterminated string"
            else:
                msg = f"unexpected character {ch!r}"
            raise _Abort(Diagnostic(ERROR, line, column, msg, "SYNTAX"))
        kind = m.lastgroup
        chunk = m.group()
        if kind not in ("ws", "comment"):
            yield Token(kind if kind != "punct" else chunk, chunk, line, column)
        newlines = chunk.count("\n")
        if newlines:
            line += newlines
            line_start = pos + chunk.rindex("\n") + 1
        pos = m.end()
    yield Token("eof", "", line, pos - line_start + 1)


# -- syntax tree (positions kept for the semantic pass) ------------------


@dataclass
class _RefNode:
    parts: list
    tokens: list

    def ref(self) -> StageRef:
        return StageRef(tuple(self.parts[:-2]), self.parts[-2], StageKind(self.parts[-1]))

    @property
    def token(self) -> Token:
        return self.tokens[0]


@dataclass
class _FlowNode:
    thing: Token
    kinds: list


@dataclass
class _MachineNode:
    name: Token
    flows: list = field(default_factory=list)
    machines: list = field(default_factory=list)


@dataclass
class _ArcNode:
    keyword: Token
    source: _RefNode
    target: _RefNode
    anchor: Optional[int]
    anchor_token: Optional[Token]
    name: Optional[Token] = None


@dataclass
class _EventNode:
    id: Token
    label: str
    region: list
    slot: Optional[int]


class _Parser:
    def __init__(self, text: str) -> None:
        self.tokens = list(_tokens(text))
        self.pos = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def _error(self, message: str, token: Optional[Token] = None, code: str = "SYNTAX") -> _Abort:
        t = token or self.tok
        return _Abort(Diagnostic(ERROR, t.line, t.column, message, code))

    def _describe(self, t: Token) -> str:
        return "end of input" if t.type == "eof" else repr(t.text)

    def advance(self) -> Token:
        t = self.tok
        if t.type != "eof":
            self.pos += 1
        return t

    def at(self, type_: str, text: Optional[str] = None) -> bool:
        t = self.tok
        return t.type == type_ and (text is None or t.text == text)

    def at_keyword(self, word: str) -> bool:
        return self.at("ident", word)

    def expect(self, type_: str, what: Optional[str] = None) -> Token:
        if self.tok.type != type_:
            raise self._error(f"expected {what or type_}, found {self._describe(self.tok)}")
        return self.advance()

    def expect_keyword(self, word: str) -> Token:
        if not self.at_keyword(word):
            raise self._error(f"expected '{word}', found {self._describe(self.tok)}")
        return self.advance()

    # grammar --------------------------------------------------------------

    def bundle(self):
        self.expect_keyword("model")
        name = self.expect("string", "model name string").value
        self.expect("{", "'{'")
        machines, arcs, triggers, events, chron = [], [], [], [], []
        while not self.at("}"):
            if self.at_keyword("machine"):
                machines.append(self.machine())
            elif self.at_keyword("arc"):
                arcs.append(self.arc())
            elif self.at_keyword("trigger"):
                triggers.append(self.arc(named=True))
            elif self.at_keyword("event"):
                events.append(self.event())
            elif self.at_keyword("chronology"):
                chron.extend(self.chronology())
            else:
                raise self._error(
                    "expected 'machine', 'arc', 'trigger', 'event', 'chronology' or '}', "
                    f"found {self._describe(self.tok)}"
                )
        self.advance()
        if not self.at("eof"):
            raise self._error(f"unexpected {self._describe(self.tok)} after end of model")
        return name, machines, arcs, triggers, events, chron

    def machine(self) -> _MachineNode:
        self.advance()
        node = _MachineNode(self.expect("ident", "machine name"))
        self.expect("{", "'{'")
        while not self.at("}"):
            if self.at_keyword("machine"):
                node.machines.append(self.machine())
            elif self.at_keyword("flow"):
                node.flows.append(self.flow())
            else:
                raise self._error(
                    f"expected 'machine', 'flow' or '}}', found {self._describe(self.tok)}"
                )
        self.advance()
        return node

    def stage_kind(self) -> Token:
        t = self.expect("ident", "stage kind")
        if t.text not in _KIND_WORDS:
            raise self._error(f"unknown stage kind {t.text!r}", t, "UNKNOWN-STAGE")
        return t

    def flow(self) -> _FlowNode:
        self.advance()
        thing = self.expect("ident", "thing name")
        self.expect("{", "'{'")
        kinds = [self.stage_kind()]
        while self.at(","):
            self.advance()
            kinds.append(self.stage_kind())
        self.expect("}", "',' or '}'")
        return _FlowNode(thing, kinds)

    def stageref(self) -> _RefNode:
        tokens = [self.expect("ident", "stage reference")]
        while self.at("."):
            self.advance()
            tokens.append(self.expect("ident", "name after '.'"))
        if len(tokens) < 3:
            raise self._error(
                "stage reference needs machine path, thing and stage kind", tokens[0]
            )
        if tokens[-1].text not in _KIND_WORDS:
            raise self._error(
                f"unknown stage kind {tokens[-1].text!r}", tokens[-1], "UNKNOWN-STAGE"
            )
        return _RefNode([t.text for t in tokens], tokens)

    def arc(self, named: bool = False) -> _ArcNode:
        keyword = self.advance()
        source = self.stageref()
        self.expect("arrow", "'->'")
        target = self.stageref()
        anchor = anchor_token = None
        if self.at("@"):
            self.advance()
            anchor_token = self.expect("int", "anchor number")
            anchor = int(anchor_token.text) or None
        node = _ArcNode(keyword, source, target, anchor, anchor_token)
        if named and self.at_keyword("as"):
            self.advance()
            node.name = self.expect("ident", "trigger name")
        return node

    def element(self):
        if self.at("("):
            self.advance()
            src = self.stageref()
            self.expect("arrow", "'->'")
            dst = self.stageref()
            self.expect(")", "')'")
            return (src, dst)
        return self.stageref()

    def event(self) -> _EventNode:
        self.advance()
        ident = self.expect("ident", "event id")
        label = self.expect("string", "event label string").value
        self.expect_keyword("region")
        self.expect("{", "'{'")
        region = []
        if not self.at("}"):
            region.append(self.element())
            while self.at(","):
                self.advance()
                region.append(self.element())
        self.expect("}", "',' or '}'")
        slot = None
        if self.at_keyword("slot"):
            self.advance()
            slot = int(self.expect("int", "time slot").text)
        return _EventNode(ident, label, region, slot)

    def chronology(self) -> list:
        self.advance()
        self.expect("{", "'{'")
        edges = []
        while not self.at("}"):
            a = self.expect("ident", "event id or '}'")
            self.expect("arrow", "'->'")
            b = self.expect("ident", "event id")
            self.expect(";", "';'")
            edges.append((a, b))
        self.advance()
        return edges


_KIND_WORDS = {k.value for k in StageKind}


# -- semantic pass ------------------------------------------------------


def _build_machine(node: _MachineNode, diags: list) -> Machine:
    flows = []
    seen_things: dict = {}
    for f in node.flows:
        if f.thing.text in seen_things:
            diags.append(
                Diagnostic(
                    ERROR,
                    f.thing.line,
                    f.thing.column,
                    f"machine {node.name.text!r} already declares a flow of {f.thing.text!r}",
                    "DUPLICATE-FLOW",
                )
            )
            continue
        seen_things[f.thing.text] = f
        kinds = set()
        for k in f.kinds:
            kind = StageKind(k.text)
            if kind in kinds:
                diags.append(
                    Diagnostic(WARNING, k.line, k.column, f"stage {k.text!r} listed twice", "DUPLICATE-STAGE")
                )
            kinds.add(kind)
        flows.append(Flow(f.thing.text, frozenset(kinds)))
    subs = []
    seen_names: set = set()
    for sub in node.machines:
        if sub.name.text in seen_names:
            diags.append(
                Diagnostic(
                    ERROR,
                    sub.name.line,
                    sub.name.column,
                    f"duplicate machine name {sub.name.text!r} inside {node.name.text!r}",
                    "DUPLICATE-MACHINE",
                )
            )
            continue
        seen_names.add(sub.name.text)
        subs.append(_build_machine(sub, diags))
    return Machine(node.name.text, tuple(flows), tuple(subs))


_RESOLVE_CODES = {
    UnknownMachinePath: "UNKNOWN-MACHINE",
    UnknownThing: "UNKNOWN-THING",
    StageNotDeclared: "STAGE-NOT-DECLARED",
}


def _check_ref(model: Model, node: _RefNode, diags: list) -> bool:
    try:
        resolve(model, node.ref())
    except ResolveError as exc:
        diags.append(
            Diagnostic(ERROR, node.token.line, node.token.column, str(exc), _RESOLVE_CODES[type(exc)])
        )
        return False
    return True


def _build_arcs(model: Model, nodes: list, trigger: bool, diags: list) -> list:
    arcs = []
    seen_pairs: set = set()
    anchors: dict = {}
    names: set = set()
    for node in nodes:
        kw = node.keyword
        ok_src = _check_ref(model, node.source, diags)
        ok_dst = _check_ref(model, node.target, diags)
        if not (ok_src and ok_dst):
            continue
        src, dst = node.source.ref(), node.target.ref()
        if src == dst:
            diags.append(Diagnostic(ERROR, kw.line, kw.column, f"{kw.text} from {src} to itself", "SELF-LOOP"))
            continue
        if not trigger and src.thing != dst.thing:
            diags.append(
                Diagnostic(
                    ERROR,
                    node.target.token.line,
                    node.target.token.column,
                    f"flow arc changes thing kind {src.thing!r} -> {dst.thing!r}; use a trigger",
                    "FLOW-KIND-CHANGE",
                )
            )
            continue
        if (src, dst) in seen_pairs:
            diags.append(Diagnostic(WARNING, kw.line, kw.column, f"duplicate {kw.text} {src} -> {dst} ignored", "DUPLICATE-ARC"))
            continue
        if node.anchor is not None:
            if node.anchor in anchors:
                t = node.anchor_token
                diags.append(
                    Diagnostic(ERROR, t.line, t.column, f"anchor @{node.anchor} already used", "DUPLICATE-ANCHOR")
                )
                continue
            anchors[node.anchor] = node
        seen_pairs.add((src, dst))
        if trigger:
            name = node.name.text if node.name else None
            if name is not None:
                if name in names:
                    diags.append(
                        Diagnostic(
                            ERROR, node.name.line, node.name.column, f"duplicate trigger name {name!r}", "DUPLICATE-TRIGGER"
                        )
                    )
                    continue
                names.add(name)
            arcs.append(TriggerArc(src, dst, node.anchor, name))
        else:
            arcs.append(FlowArc(src, dst, node.anchor))
    return arcs


def parse(text: str) -> ParsedBundle:
    try:
        name, machine_nodes, arc_nodes, trig_nodes, event_nodes, chron_nodes = _Parser(text).bundle()
    except _Abort as exc:
        raise TMSyntaxError([exc.diagnostic]) from None

    diags: list = []
    roots = []
    seen_roots: set = set()
    for node in machine_nodes:
        if node.name.text in seen_roots:
            diags.append(
                Diagnostic(
                    ERROR, node.name.line, node.name.column, f"duplicate machine name {node.name.text!r}", "DUPLICATE-MACHINE"
                )
            )
            continue
        seen_roots.add(node.name.text)
        roots.append(_build_machine(node, diags))
    skeleton = Model(name, tuple(roots))
    flows = _build_arcs(skeleton, arc_nodes, False, diags)
    triggers = _build_arcs(skeleton, trig_nodes, True, diags)

    events = []
    seen_ids: set = set()
    for ev in event_nodes:
        if ev.id.text in seen_ids:
            diags.append(
                Diagnostic(ERROR, ev.id.line, ev.id.column, f"duplicate event id {ev.id.text!r}", "DUPLICATE-EVENT")
            )
            continue
        seen_ids.add(ev.id.text)
        region = tuple(
            (e[0].ref(), e[1].ref()) if isinstance(e, tuple) else e.ref() for e in ev.region
        )
        events.append(EventDef(ev.id.text, ev.label, region, ev.slot))

    edges = []
    for a, b in chron_nodes:
        pair = (a.text, b.text)
        if pair in edges:
            diags.append(Diagnostic(WARNING, a.line, a.column, f"duplicate chronology edge {a.text} -> {b.text}", "DUPLICATE-EDGE"))
            continue
        edges.append(pair)

    errors = [d for d in diags if d.severity == ERROR]
    if errors:
        raise TMSyntaxError(errors)
    model = Model(name, tuple(roots), tuple(flows), tuple(triggers))
    return ParsedBundle(model, tuple(events), Chronology(tuple(edges)), tuple(diags))


# -- serialization ------------------------------------------------------


def _arc_key(arc) -> tuple:
    return (arc.source.sort_key(), arc.target.sort_key())


def _quote(text: str) -> str:
    out = text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\t", "\\t")
    return f'"{out}"'


def _emit_machine(machine: Machine, depth: int, out: list) -> None:
    pad = "  " * depth
    if not machine.flows and not machine.submachines:
        out.append(f"{pad}machine {machine.name} {{ }}")
        return
    out.append(f"{pad}machine {machine.name} {{")
    for flow in machine.flows:
        kinds = ", ".join(k.value for k in flow.ordered_stages())
        out.append(f"{pad}  flow {flow.thing} {{ {kinds} }}")
    for sub in machine.submachines:
        _emit_machine(sub, depth + 1, out)
    out.append(f"{pad}}}")


def _emit_arc(keyword: str, arc) -> str:
    line = f"  {keyword} {arc.source} -> {arc.target}"
    if arc.paper_anchor:
        line += f" @{arc.paper_anchor}"
    if getattr(arc, "name", None):
        line += f" as {arc.name}"
    return line


def serialize(bundle: ParsedBundle) -> str:
    model = bundle.model
    dangling = model.dangling_refs()
    if dangling:
        raise DanglingReference(dangling[0])
    sections: list[list[str]] = []

    machines: list[str] = []
    for root in model.root_machines:
        _emit_machine(root, 1, machines)
    sections.append(machines)
    sections.append([_emit_arc("arc", a) for a in sorted(model.flow_arcs, key=_arc_key)])
    sections.append([_emit_arc("trigger", t) for t in sorted(model.trigger_arcs, key=_arc_key)])

    events = []
    for ev in sorted(bundle.events, key=lambda e: natural_key(e.id)):
        region = ", ".join(element_str(e) for e in ev.region)
        line = f"  event {ev.id} {_quote(ev.label)} region {{ {region} }}" if region else (
            f"  event {ev.id} {_quote(ev.label)} region {{ }}"
        )
        if ev.time_slot is not None:
            line += f" slot {ev.time_slot}"
        events.append(line)
    sections.append(events)

    if bundle.chronology.edges:
        chron = ["  chronology {"]
        chron += [f"    {a} -> {b};" for a, b in bundle.chronology.edges]
        chron.append("  }")
        sections.append(chron)

    body = "\n\n".join("\n".join(s) for s in sections if s)
    if body:
        return f"model {_quote(model.name)} {{\n{body}\n}}\n"
    return f"model {_quote(model.name)} {{\n}}\n"
