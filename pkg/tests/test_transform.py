import pytest
from hypothesis import HealthCheck, given, settings

from strategies import bundles, models
from tmkit import graphs
from tmkit.core import Chronology, EventDef, StageRef
from tmkit.dsl import parse
from tmkit.fixtures import builtin_bundle
from tmkit.transform import (
    CyclicInduction,
    IdSetMismatch,
    InvalidModel,
    compare_chronology,
    induced_precedence,
    induced_relation,
    port_graph,
    simplify,
    size_reduction,
)

DEPOT = parse("""model "Depot" {
  machine Truck { flow Parcel { create, release, transfer } }
  machine Hub {
    flow Parcel { transfer, receive, release }
    machine Scanner { flow Parcel { transfer, receive, process } }
  }
  arc Truck.Parcel.create -> Truck.Parcel.release
  arc Truck.Parcel.release -> Truck.Parcel.transfer
  arc Truck.Parcel.transfer -> Hub.Parcel.transfer
  arc Hub.Parcel.transfer -> Hub.Parcel.receive
  arc Hub.Parcel.receive -> Hub.Parcel.release
  arc Hub.Parcel.release -> Hub.Parcel.transfer
  arc Hub.Parcel.transfer -> Hub.Scanner.Parcel.transfer
  arc Hub.Scanner.Parcel.transfer -> Hub.Scanner.Parcel.receive
  arc Hub.Scanner.Parcel.receive -> Hub.Scanner.Parcel.process
}""").model


def r(text):
    return StageRef.parse(text)


def test_simplify_top_level():
    g = simplify(DEPOT)
    assert g.nodes == (("Truck",), ("Hub",))
    assert g.edges == ((("Truck",), ("Hub",), "Parcel"),)
    assert len(g.witnesses[g.edges[0]]) == 1
    # 9 stages + 9 arcs collapse to 2 nodes + 1 edge
    assert DEPOT.size() == 18
    assert size_reduction(DEPOT, g) == pytest.approx(1 - 3 / 18)


def test_simplify_full_depth_keeps_submachines():
    g = simplify(DEPOT, depth=None)
    assert g.nodes == (("Truck",), ("Hub",), ("Hub", "Scanner"))
    assert [e[:2] for e in g.edges] == [(("Hub",), ("Hub", "Scanner")), (("Truck",), ("Hub",))]


def test_simplify_rejects_invalid_models():
    bad = parse('model "M" { machine A { flow X { create, transfer } } arc A.X.create -> A.X.transfer }').model
    with pytest.raises(InvalidModel) as info:
        simplify(bad)
    assert info.value.report.codes() == ["R1-ILLEGAL-SUCCESSOR"]
    with pytest.raises(ValueError):
        simplify(DEPOT, depth=0)


def test_fleet_simplification_halves_the_diagram():
    m = builtin_bundle("fleet_tracking").model
    g = simplify(m)
    assert {n[0] for n in g.nodes} == {root.name for root in m.root_machines}
    assert g.size() < 0.5 * m.size()


@settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(models())
def test_component_graph_model_round_trip(m):
    g = simplify(m, depth=None)
    assert simplify(g.to_model(), depth=None) == g
    assert len(g.nodes) == len(list(m.walk()))
    assert len(g.edges) <= sum(a.crosses_machines for a in m.flow_arcs)


def test_transfer_stage_is_split_into_ports():
    graph = port_graph(DEPOT)
    hub_t = r("Hub.Parcel.transfer")
    # arriving from the truck lands on the inbound port, which leads inward
    assert ((hub_t, "in"), DEPOT.flow_arcs[2]) in graph[(r("Truck.Parcel.transfer"), "out")]
    assert [p for p, _ in graph[(hub_t, "in")]] == [(r("Hub.Parcel.receive"), None)]
    # the machine's own release feeds the outbound port, which leaves it
    assert [p for p, _ in graph[(r("Hub.Parcel.release"), None)]] == [(hub_t, "out")]
    assert [p for p, _ in graph[(hub_t, "out")]] == [(r("Hub.Scanner.Parcel.transfer"), "in")]


def ev(eid, *elements):
    return EventDef(eid, eid, tuple(elements))


def test_induced_chain_is_reduced():
    events = [
        ev("E1", r("Truck.Parcel.create"), r("Truck.Parcel.release"), r("Truck.Parcel.transfer")),
        ev("E2", r("Hub.Parcel.receive")),
        ev("E3", r("Hub.Scanner.Parcel.process")),
    ]
    dag = induced_precedence(DEPOT, events)
    assert dag.edges == (("E1", "E2"), ("E2", "E3"))
    w = dag.derivation[("E1", "E2")][0]
    assert w.thing == "Parcel" and w.reached == "Hub.Parcel.receive"


def test_named_arc_covers_only_the_ports_it_touches():
    events = [
        ev("E1", (r("Truck.Parcel.transfer"), r("Hub.Parcel.transfer"))),
        ev("E2", r("Hub.Parcel.release")),
    ]
    # E2's release feeds the hub's outbound port, which E1 does not own
    assert set(induced_relation(DEPOT, events)) == {("E1", "E2")}


def test_whole_transfer_stage_covers_both_ports():
    events = [ev("E1", r("Hub.Parcel.transfer")), ev("E2", r("Hub.Parcel.release"))]
    assert set(induced_relation(DEPOT, events)) == {("E1", "E2"), ("E2", "E1")}
    with pytest.raises(CyclicInduction) as info:
        induced_precedence(DEPOT, events)
    assert sorted(info.value.cycles[0]) == ["E1", "E2"]


def test_compare_chronology():
    events = [ev("E1", r("Truck.Parcel.create")), ev("E2", r("Hub.Parcel.receive")), ev("E3", r("Hub.Scanner.Parcel.process"))]
    dag = induced_precedence(DEPOT, events)
    assert compare_chronology(Chronology((("E1", "E3"),)), dag).consistent
    cmp = compare_chronology(Chronology((("E3", "E2"),)), dag)
    assert cmp.missing == (("E3", "E2"),)
    assert cmp.contradictions == (("E2", "E3"),)
    assert "E3 -> E2" in cmp.render()
    with pytest.raises(IdSetMismatch):
        compare_chronology(Chronology((("E1", "E9"),)), dag)


@pytest.mark.parametrize("name", ["anti_theft", "fleet_tracking"])
def test_fixture_chronologies_agree_with_dataflow(name):
    b = builtin_bundle(name)
    cmp = compare_chronology(b.chronology, induced_precedence(b.model, b.events))
    assert cmp.contradictions == ()
    assert cmp.missing == ()


@settings(max_examples=80, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(bundles())
def test_induced_dag_is_reduction_of_relation(b):
    relation = induced_relation(b.model, b.events)
    try:
        dag = induced_precedence(b.model, b.events)
    except CyclicInduction as exc:
        assert graphs.find_cycles(graphs.adjacency([e.id for e in b.events], relation))
        assert exc.cycles
        return
    ids = [e.id for e in b.events]
    assert set(dag.edges) <= set(relation)
    assert dag.closure() == graphs.transitive_closure(graphs.adjacency(ids, relation))
    assert compare_chronology(dag.as_chronology(), dag).consistent
