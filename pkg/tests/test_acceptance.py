"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` or ``python3 tests/test_acceptance.py``.
"""

import contextlib
import io
import itertools
import sys
import time
from pathlib import Path

import pytest
from hypothesis import HealthCheck, given, settings

sys.path.insert(0, str(Path(__file__).parent))

from strategies import bundles, simulations  # noqa: E402
from tmkit.cli import main  # noqa: E402
from tmkit.core import Flow, FlowArc, Machine, Model, StageKind, StageRef  # noqa: E402
from tmkit.dsl import parse, serialize, structurally_equal  # noqa: E402
from tmkit.export import to_structured  # noqa: E402
from tmkit.fixtures import SCENARIOS, builtin_bundle, builtin_scenario  # noqa: E402
from tmkit.sim import check_order, replay, run  # noqa: E402
from tmkit.transform import compare_chronology, induced_precedence  # noqa: E402
from tmkit.validate import validate_bundle, validate_structure  # noqa: E402

FIXTURES = ("anti_theft", "fleet_tracking")


@pytest.fixture
def criterion(capsys):
    """Yield a context manager that prints one PASS/FAIL line for a criterion."""

    @contextlib.contextmanager
    def check(number, title):
        try:
            yield
        except BaseException as exc:
            with capsys.disabled():
                reason = (str(exc).splitlines() or [""])[0][:120]
                print(f"\n[acceptance {number}] FAIL  {title} ({type(exc).__name__}: {reason})")
            raise
        with capsys.disabled():
            print(f"\n[acceptance {number}] PASS  {title}")

    return check


def test_1_simplification_ratio(criterion):
    with criterion(1, "simplified fleet diagram is under half the full size, in < 1 s"):
        out = io.StringIO()
        start = time.perf_counter()
        with contextlib.redirect_stdout(out):
            code = main(["simplify", "fleet_tracking.tm"])
        elapsed = time.perf_counter() - start
        assert code == 0
        lines = dict(line.split(": ", 1) for line in out.getvalue().splitlines())
        full = int(lines["full size"].split()[0])
        simplified = int(lines["simplified size"].split()[0])
        assert simplified < 0.5 * full, (simplified, full)
        assert float(lines["reduction ratio"]) > 0.5
        assert elapsed < 1.0, elapsed


# intra-machine successor table written out independently of the validator
LEGAL = {
    ("transfer", "receive"), ("receive", "process"), ("receive", "release"), ("process", "release"),
    ("create", "process"), ("create", "release"), ("release", "transfer"),
}


def _micro(src, dst, cross):
    s, d = StageKind(src), StageKind(dst)
    if cross:
        machines = (Machine("A", (Flow("X", {s}),)), Machine("B", (Flow("X", {d}),)))
        arc = FlowArc(StageRef(("A",), "X", s), StageRef(("B",), "X", d))
    else:
        machines = (Machine("A", (Flow("X", {s, d}),)),)
        arc = FlowArc(StageRef(("A",), "X", s), StageRef(("A",), "X", d))
    return Model("micro", machines, (arc,))


def test_2_legality_table(criterion):
    with criterion(2, "25 intra pairs match the successor table; only transfer->transfer crosses"):
        kinds = [k.value for k in StageKind]
        for src, dst in itertools.product(kinds, kinds):
            if src == dst:
                with pytest.raises(ValueError):
                    _micro(src, dst, cross=False)
                assert (src, dst) not in LEGAL
            else:
                codes = validate_structure(_micro(src, dst, cross=False)).codes()
                assert codes == ([] if (src, dst) in LEGAL else ["R1-ILLEGAL-SUCCESSOR"]), (src, dst)
            codes = validate_structure(_micro(src, dst, cross=True)).codes()
            assert codes == ([] if (src, dst) == ("transfer", "transfer") else ["R3-BOUNDARY"]), (src, dst)


def test_3_fixture_validity(criterion):
    with criterion(3, "both fixtures pass structure, event and chronology validation"):
        for name in FIXTURES:
            report = validate_bundle(builtin_bundle(name))
            assert report.violations == (), report.render(name)


NON_OPERATOR = {f"E{i}" for i in range(1, 13)}


def test_4_chronology_reproduction(criterion):
    with criterion(4, "fleet_day fires all 18 events in declared order; operator-free run fires E1-E12, in < 5 s"):
        start = time.perf_counter()
        b = builtin_bundle("fleet_tracking")
        scenario = builtin_scenario("fleet_day")
        trace = run(b.model, scenario, b.events)
        fired = dict(trace.event_firings)
        assert set(fired) == {e.id for e in b.events} and len(fired) == 18
        result = check_order(trace.event_firings, b.chronology)
        assert result, str(result)
        quiet = run(b.model, scenario.without("Operator"), b.events)
        assert set(dict(quiet.event_firings)) == NON_OPERATOR
        assert check_order(quiet.event_firings, b.chronology)
        elapsed = time.perf_counter() - start
        assert elapsed < 5.0, elapsed


ALERTS = ("TemperatureAlert", "SpeedAlert", "AccelerationAlert")


def test_5_alert_behavior(criterion):
    with criterion(5, "one alert per violated rule, each reaching Interface and Driver; none when in range"):
        b = builtin_bundle("fleet_tracking")
        trace = run(b.model, builtin_scenario("fleet_alerts"))
        for kind in ALERTS:
            born = [r for r in trace.created(kind) if r.note == "trigger"]
            assert len(born) == 1, (kind, born)
            alert = born[0].thing
            family = {alert} | {t.id for t in trace.things if t.attributes.get("parent") == alert}
            reached = {r.element.machine_path for r in trace.records if r.action == "ENTER" and r.thing in family}
            assert ("TrackingSystem", "Interface") in reached, kind
            assert ("Driver",) in reached, kind
        normal = run(b.model, builtin_scenario("fleet_normal"))
        assert not any(normal.created(kind) for kind in ALERTS)


def test_6_oracle_agreement(criterion):
    with criterion(6, "dataflow-induced precedence has no contradictions with either declared chronology"):
        for name in FIXTURES:
            b = builtin_bundle(name)
            cmp = compare_chronology(b.chronology, induced_precedence(b.model, b.events))
            assert cmp.contradictions == (), (name, cmp.contradictions)


def test_7_round_trip(criterion):
    with criterion(7, "fixtures and 200 random bundles round-trip through serialize/parse"):
        for name in FIXTURES:
            b = builtin_bundle(name)
            text = serialize(b)
            assert structurally_equal(parse(text), b)
            assert serialize(parse(text)) == text

        @settings(max_examples=200, deadline=None, database=None,
                  suppress_health_check=[HealthCheck.too_slow])
        @given(bundles())
        def prop(b):
            text = serialize(b)
            again = parse(text)
            assert structurally_equal(again, b)
            assert serialize(again) == text

        prop()


def test_8_determinism(criterion):
    with criterion(8, "repeated runs give byte-identical structured traces"):
        for name, bundle_name in SCENARIOS.items():
            b = builtin_bundle(bundle_name)
            s = builtin_scenario(name)
            assert to_structured(run(b.model, s, b.events)) == to_structured(run(b.model, s, b.events)), name

        @settings(max_examples=100, deadline=None, database=None,
                  suppress_health_check=[HealthCheck.too_slow])
        @given(simulations())
        def prop(case):
            b, s = case
            assert to_structured(run(b.model, s, b.events)) == to_structured(run(b.model, s, b.events))

        prop()


def test_9_trace_replay(criterion):
    with criterion(9, "every trace replays cleanly on fixtures and random scenarios"):
        for name, bundle_name in SCENARIOS.items():
            b = builtin_bundle(bundle_name)
            report = replay(b.model, run(b.model, builtin_scenario(name)))
            assert report.ok, (name, report.problems[:3])

        @settings(max_examples=150, deadline=None, database=None,
                  suppress_health_check=[HealthCheck.too_slow])
        @given(simulations())
        def prop(case):
            b, s = case
            report = replay(b.model, run(b.model, s))
            assert report.ok, report.problems[:3]

        prop()


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
