"""Renderers: Graphviz DOT, the versioned structured (JSON) format, and
tab-delimited event tables."""

from __future__ import annotations

import enum
import json
from typing import Iterable, Mapping, Optional, Union

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
    natural_key,
)
from .dsl import ParsedBundle
from .sim.engine import Thing, Trace, TraceRecord
from .transform import ComponentGraph

FORMAT_VERSION = "tmkit/1"


class ExportFormat(enum.Enum):
    DOT = "dot"
    STRUCTURED = "structured"
    TABLE = "table"


class StructuredFormatError(ValueError):
    pass


# -- DOT --------------------------------------------------------------------


def _q(text: str) -> str:
    return '"' + str(text).replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n") + '"'


def _machine_cluster(path: tuple, machine: Machine, depth: int, out: list) -> None:
    pad = "  " * depth
    out.append(f"{pad}subgraph {_q('cluster_' + '.'.join(path))} {{")
    out.append(f"{pad}  label={_q(machine.name)};")
    for flow in machine.flows:
        for kind in flow.ordered_stages():
            ref = StageRef(path, flow.thing, kind)
            out.append(f"{pad}  {_q(ref)} [label={_q(f'{kind.title}({flow.thing})')}];")
    for sub in machine.submachines:
        _machine_cluster((*path, sub.name), sub, depth + 1, out)
    out.append(f"{pad}}}")


def _edge(arc: Union[FlowArc, TriggerArc]) -> str:
    attrs = []
    if isinstance(arc, TriggerArc):
        attrs.append("style=dashed")
    if arc.paper_anchor:
        attrs.append(f"label={_q(arc.paper_anchor)}")
    tail = f" [{', '.join(attrs)}]" if attrs else ""
    return f"  {_q(arc.source)} -> {_q(arc.target)}{tail};"


def to_dot(subject: Union[Model, ComponentGraph, ParsedBundle], name: Optional[str] = None) -> str:
    """Model: nested clusters per machine, dashed triggers.  ComponentGraph: flat."""
    if isinstance(subject, ParsedBundle):
        subject = subject.model
    if isinstance(subject, ComponentGraph):
        lines = [f"digraph {_q(name or 'components')} {{", "  node [shape=box];"]
        for node in subject.nodes:
            lines.append(f"  {_q('.'.join(node))} [label={_q(node[-1])}];")
        for src, dst, thing in subject.edges:
            lines.append(f"  {_q('.'.join(src))} -> {_q('.'.join(dst))} [label={_q(thing)}];")
        lines.append("}")
        return "\n".join(lines) + "\n"
    if not isinstance(subject, Model):
        raise TypeError(f"cannot render {type(subject).__name__} as DOT")
    lines = [f"digraph {_q(name or subject.name)} {{", "  node [shape=box];"]
    for root in subject.root_machines:
        _machine_cluster((root.name,), root, 1, lines)
    lines.extend(_edge(a) for a in subject.flow_arcs)
    lines.extend(_edge(t) for t in subject.trigger_arcs)
    lines.append("}")
    return "\n".join(lines) + "\n"


# -- structured -------------------------------------------------------------


def _machine_doc(machine: Machine) -> dict:
    return {
        "name": machine.name,
        "flows": [
            {"thing": f.thing, "stages": [k.value for k in f.ordered_stages()]} for f in machine.flows
        ],
        "submachines": [_machine_doc(m) for m in machine.submachines],
    }


def _element_doc(element) -> Union[str, dict]:
    if isinstance(element, StageRef):
        return str(element)
    src, dst = element
    return {"source": str(src), "target": str(dst)}


def _bundle_doc(bundle: ParsedBundle) -> dict:
    m = bundle.model
    return {
        "format": FORMAT_VERSION,
        "kind": "bundle",
        "name": m.name,
        "machines": [_machine_doc(r) for r in m.root_machines],
        "arcs": [
            {"source": str(a.source), "target": str(a.target), "anchor": a.paper_anchor} for a in m.flow_arcs
        ],
        "triggers": [
            {"source": str(t.source), "target": str(t.target), "anchor": t.paper_anchor, "name": t.name}
            for t in m.trigger_arcs
        ],
        "events": [
            {
                "id": ev.id,
                "label": ev.label,
                "region": [_element_doc(e) for e in ev.region],
                "slot": ev.time_slot,
            }
            for ev in bundle.events
        ],
        "chronology": [list(e) for e in bundle.chronology.edges],
    }


def _trace_doc(trace: Trace) -> dict:
    return {
        "format": FORMAT_VERSION,
        "kind": "trace",
        "steps": trace.steps,
        "halted": trace.halted,
        "records": [
            {
                "step": r.step,
                "thing": r.thing,
                "action": r.action,
                "element": _element_doc(r.element),
                "cause": r.cause,
                "note": r.note,
            }
            for r in trace.records
        ],
        "things": [
            {"id": t.id, "kind": t.kind, "attributes": t.attributes, "birth_step": t.birth_step}
            for t in trace.things
        ],
        "event_firings": [[e, s] for e, s in trace.event_firings],
        "refirings": {k: list(v) for k, v in trace.refirings.items()},
    }


def to_structured(subject: Union[ParsedBundle, Trace]) -> str:
    if isinstance(subject, ParsedBundle):
        doc = _bundle_doc(subject)
    elif isinstance(subject, Trace):
        doc = _trace_doc(subject)
    else:
        raise TypeError(f"cannot render {type(subject).__name__} as a structured document")
    return json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def _load_machine(doc: dict) -> Machine:
    flows = tuple(Flow(f["thing"], {StageKind.parse(k) for k in f["stages"]}) for f in doc["flows"])
    return Machine(doc["name"], flows, tuple(_load_machine(m) for m in doc["submachines"]))


def _load_element(doc):
    if isinstance(doc, str):
        return StageRef.parse(doc)
    return (StageRef.parse(doc["source"]), StageRef.parse(doc["target"]))


def _load_bundle(doc: dict) -> ParsedBundle:
    model = Model(
        doc["name"],
        tuple(_load_machine(m) for m in doc["machines"]),
        tuple(
            FlowArc(StageRef.parse(a["source"]), StageRef.parse(a["target"]), a.get("anchor"))
            for a in doc["arcs"]
        ),
        tuple(
            TriggerArc(StageRef.parse(t["source"]), StageRef.parse(t["target"]), t.get("anchor"), t.get("name"))
            for t in doc["triggers"]
        ),
    )
    events = tuple(
        EventDef(e["id"], e["label"], tuple(_load_element(x) for x in e["region"]), e.get("slot"))
        for e in doc["events"]
    )
    return ParsedBundle(model, events, Chronology(tuple(tuple(e) for e in doc["chronology"])))


def _load_trace(doc: dict) -> Trace:
    records = tuple(
        TraceRecord(r["step"], r["thing"], _load_element(r["element"]), r["action"], r["cause"], r["note"])
        for r in doc["records"]
    )
    things = tuple(Thing(t["id"], t["kind"], dict(t["attributes"]), t["birth_step"]) for t in doc["things"])
    return Trace(
        records,
        things,
        tuple((e, s) for e, s in doc["event_firings"]),
        {k: tuple(v) for k, v in doc["refirings"].items()},
        doc["steps"],
        doc["halted"],
    )


def load_structured(text: str) -> Union[ParsedBundle, Trace]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise StructuredFormatError(f"not a structured document: {exc}") from None
    if not isinstance(doc, dict) or doc.get("format") != FORMAT_VERSION:
        raise StructuredFormatError(f"expected a document with format {FORMAT_VERSION!r}")
    try:
        if doc.get("kind") == "bundle":
            return _load_bundle(doc)
        if doc.get("kind") == "trace":
            return _load_trace(doc)
    except (KeyError, TypeError, ValueError) as exc:
        raise StructuredFormatError(f"malformed {doc.get('kind')} document: {exc}") from None
    raise StructuredFormatError(f"unknown document kind {doc.get('kind')!r}")


# -- tables -----------------------------------------------------------------

TABLE_HEADER = ("id", "label", "predecessors", "firing_step")


def _cell(text: str) -> str:
    return str(text).replace("\t", " ").replace("\n", " ")


def to_event_table(
    events: Iterable[EventDef],
    firings: Union[Mapping, Iterable] = (),
    chronology: Optional[Chronology] = None,
) -> str:
    steps = dict(firings.items() if isinstance(firings, Mapping) else firings)
    rows = ["\t".join(TABLE_HEADER)]
    for ev in sorted(events, key=lambda e: natural_key(e.id)):
        preds = chronology.predecessors(ev.id) if chronology is not None else []
        step = steps.get(ev.id)
        rows.append(
            "\t".join(
                (
                    _cell(ev.id),
                    _cell(ev.label),
                    ",".join(preds) if preds else "-",
                    "-" if step is None else str(step),
                )
            )
        )
    return "\n".join(rows) + "\n"


def render(subject, fmt: ExportFormat) -> str:
    if fmt is ExportFormat.DOT:
        return to_dot(subject)
    if fmt is ExportFormat.STRUCTURED:
        return to_structured(subject)
    if fmt is ExportFormat.TABLE:
        if isinstance(subject, ParsedBundle):
            return to_event_table(subject.events, (), subject.chronology)
        raise TypeError("tables are rendered from bundles")
    raise AssertionError(fmt)
