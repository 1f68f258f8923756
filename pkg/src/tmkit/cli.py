"""``tm`` command line.

Exit status: 0 success, 1 validation failure, 2 input or parse error,
3 simulation error.  Data goes to stdout, diagnostics to stderr.  ``-``
reads stdin; ``@name`` reads a bundled fixture (``@fleet_tracking``,
``@fleet_day``).
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .dsl import ParsedBundle, TMSyntaxError, parse, serialize
from .export import ExportFormat, StructuredFormatError, load_structured, to_dot, to_event_table, to_structured
from .fixtures import BUNDLES, SCENARIOS, fixture, read_text
from .sim import AmbiguousFlow, ScenarioError, SimulationError, check_order, load_scenario, run
from .transform import (
    CyclicInduction,
    IdSetMismatch,
    InvalidModel,
    compare_chronology,
    induced_precedence,
    simplify,
    size_reduction,
)
from .validate import validate_bundle, validate_chronology, validate_events, validate_structure

OK, INVALID, BAD_INPUT, SIM_ERROR = 0, 1, 2, 3


class InputError(Exception):
    pass


def _color() -> bool:
    setting = os.environ.get("TM_COLOR")
    if setting is not None:
        return setting != "0"
    return sys.stderr.isatty()


def _err(msg: str, level: str = "error") -> None:
    tag = f"{level}:"
    if _color():
        tag = ("\033[31m" if level == "error" else "\033[33m") + tag + "\033[0m"
    print(f"tm: {tag} {msg}", file=sys.stderr)


def _read(source: str, kind: str) -> str:
    if source == "-":
        return sys.stdin.read()
    if source.startswith("@"):
        name = source[1:]
        if kind == "bundle" and name in BUNDLES:
            return read_text(fixture(name).model_file)
        if kind == "scenario" and name in SCENARIOS:
            return read_text(f"{name}.scn")
        raise InputError(f"no bundled {kind} named {name!r}")
    path = Path(source)
    if not path.exists():
        # bare fixture file names resolve to the bundled copies
        bundled = {f.model_file for f in BUNDLES.values()} | {f"{s}.scn" for s in SCENARIOS}
        if path.name == source and source in bundled:
            return read_text(source)
        raise InputError(f"{source}: no such file")
    try:
        return path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise InputError(f"{source}: {exc}") from None


def _load_bundle(source: str) -> ParsedBundle:
    text = _read(source, "bundle")
    if text.lstrip().startswith("{"):
        try:
            doc = load_structured(text)
        except StructuredFormatError as exc:
            raise InputError(f"{source}: {exc}") from None
        if not isinstance(doc, ParsedBundle):
            raise InputError(f"{source}: expected a bundle document, found a trace")
        return doc
    try:
        bundle = parse(text)
    except TMSyntaxError as exc:
        lines = "\n".join(f"  {source}:{d}" for d in exc.diagnostics)
        raise InputError(f"cannot parse {source}\n{lines}") from None
    for d in bundle.diagnostics:
        _err(f"{source}:{d}", "warning")
    return bundle


def _write(text: str, out: Optional[str]) -> None:
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


# -- commands ---------------------------------------------------------------


def cmd_parse(args) -> int:
    bundle = _load_bundle(args.model)
    _write(serialize(bundle), args.out)
    return OK


def cmd_validate(args) -> int:
    bundle = _load_bundle(args.model)
    parts = [
        ("structure", validate_structure(bundle.model)),
        ("events", validate_events(bundle.model, bundle.events)),
        ("chronology", validate_chronology(bundle.events, bundle.chronology)),
    ]
    for title, report in parts:
        print(report.render(title))
    passed = all(r.passed for _, r in parts)
    print("valid" if passed else "invalid")
    return OK if passed else INVALID


def cmd_simplify(args) -> int:
    bundle = _load_bundle(args.model)
    start = time.perf_counter()
    graph = simplify(bundle.model, None if args.depth == 0 else args.depth)
    ratio = size_reduction(bundle.model, graph)
    elapsed = time.perf_counter() - start
    print(f"full size: {bundle.model.size()} ({len(bundle.model.stage_set)} stages, {len(bundle.model.arcs)} arcs)")
    print(f"simplified size: {graph.size()} ({len(graph.nodes)} machines, {len(graph.edges)} edges)")
    print(f"reduction ratio: {ratio:.3f}")
    if args.verbose:
        print(f"time: {elapsed * 1000:.1f} ms")
    if args.out:
        _write(to_dot(graph, bundle.model.name), args.out)
    return OK


def cmd_events(args) -> int:
    bundle = _load_bundle(args.model)
    report = validate_bundle(bundle)
    if not report.passed:
        _err(report.render("bundle"))
        return INVALID
    sys.stdout.write(to_event_table(bundle.events, (), bundle.chronology))
    if not args.induced:
        return OK
    try:
        dag = induced_precedence(bundle.model, bundle.events)
    except CyclicInduction as exc:
        _err(str(exc))
        return INVALID
    print()
    print("induced chronology:")
    for a, b in dag.edges:
        witness = dag.derivation[(a, b)][0]
        print(f"  {a} -> {b}    ({witness})")
    if not bundle.chronology.edges:
        return OK
    try:
        cmp = compare_chronology(bundle.chronology, dag)
    except IdSetMismatch as exc:
        _err(str(exc))
        return INVALID
    if cmp.consistent:
        print("declared chronology agrees with dataflow")
        return OK
    print(cmp.render())
    return INVALID


def cmd_simulate(args) -> int:
    bundle = _load_bundle(args.model)
    text = _read(args.scenario, "scenario")
    try:
        scenario = load_scenario(text, bundle.model)
    except ScenarioError as exc:
        _err(f"{args.scenario}:{exc}")
        return SIM_ERROR
    if args.max_steps is not None:
        scenario = scenario.with_max_steps(args.max_steps)
    try:
        trace = run(bundle.model, scenario, bundle.events)
    except InvalidModel as exc:
        _err(exc.report.render("structure"))
        return INVALID
    except (AmbiguousFlow, SimulationError) as exc:
        _err(str(exc))
        return SIM_ERROR
    if args.trace:
        _write(to_structured(trace), args.trace)
    if not args.quiet:
        if trace.records:
            print(trace.render())
        print()
    sys.stdout.write(to_event_table(bundle.events, trace.event_firings, bundle.chronology))
    if trace.halted != "quiescent":
        _err(f"stopped after {trace.steps} steps with things in flight or injections pending", "warning")
    if args.check_chronology:
        result = check_order(trace.event_firings, bundle.chronology)
        if not result:
            _err(f"chronology violated: {result}")
            return INVALID
        print(f"chronology: {len(trace.event_firings)} events fired in declared order")
    return OK


def cmd_export(args) -> int:
    bundle = _load_bundle(args.model)
    fmt = ExportFormat(args.format)
    if fmt is ExportFormat.DOT:
        text = to_dot(bundle.model)
    elif fmt is ExportFormat.STRUCTURED:
        text = to_structured(bundle)
    elif fmt is ExportFormat.TABLE:
        text = to_event_table(bundle.events, (), bundle.chronology)
    else:
        raise AssertionError(fmt)
    _write(text, args.out)
    return OK


# -- entry point ----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tm", description="Parse, check, transform and simulate TM models.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def model_arg(sp):
        sp.add_argument("model", help="model bundle (.tm or structured JSON); '-' for stdin, @name for a bundled fixture")

    sp = sub.add_parser("parse", help="parse a bundle and print its canonical form")
    model_arg(sp)
    sp.add_argument("--out", help="write to a file instead of stdout")
    sp.set_defaults(func=cmd_parse)

    sp = sub.add_parser("validate", help="check structure, events and chronology")
    model_arg(sp)
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("simplify", help="collapse machines to components and report the size reduction")
    model_arg(sp)
    sp.add_argument("--depth", type=int, default=1, help="machine nesting levels to keep (0 keeps all)")
    sp.add_argument("--out", help="write the component graph as DOT")
    sp.add_argument("-v", "--verbose", action="store_true")
    sp.set_defaults(func=cmd_simplify)

    sp = sub.add_parser("events", help="list events; --induced derives their order from dataflow")
    model_arg(sp)
    sp.add_argument("--induced", action="store_true", help="derive precedence and compare it with the declared one")
    sp.set_defaults(func=cmd_events)

    sp = sub.add_parser("simulate", help="run a scenario and report event firings")
    model_arg(sp)
    sp.add_argument("scenario", help="scenario file; '-' for stdin, @name for a bundled scenario")
    sp.add_argument("--check-chronology", action="store_true", help="fail if firings break the declared order")
    sp.add_argument("--trace", metavar="OUT", help="write the structured trace to OUT")
    sp.add_argument("--max-steps", type=int, metavar="N", help="override the scenario's step limit")
    sp.add_argument("-q", "--quiet", action="store_true", help="print only the event table")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("export", help="render a bundle")
    model_arg(sp)
    sp.add_argument("--format", required=True, choices=[f.value for f in ExportFormat])
    sp.add_argument("--out", help="write to a file instead of stdout")
    sp.set_defaults(func=cmd_export)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "max_steps", None) is not None and args.max_steps < 0:
        _err("--max-steps must not be negative")
        return BAD_INPUT
    try:
        return args.func(args)
    except InputError as exc:
        _err(str(exc))
        return BAD_INPUT
    except InvalidModel as exc:
        _err(exc.report.render("structure"))
        return INVALID
    except BrokenPipeError:
        return OK


if __name__ == "__main__":
    sys.exit(main())
