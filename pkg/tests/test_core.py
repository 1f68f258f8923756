import pytest

from tmkit.core import (
    Chronology,
    ElementNotInModel,
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
    natural_key,
    region_subgraph,
    resolve,
)

C, P, RL, RC, T = (StageKind.CREATE, StageKind.PROCESS, StageKind.RELEASE, StageKind.RECEIVE, StageKind.TRANSFER)


def ref(text):
    return StageRef.parse(text)


@pytest.fixture
def small():
    device = Machine(
        "Device",
        (Flow("Msg", {C, P, RL, T}),),
        (Machine("Antenna", (Flow("Nav", {T, RC}),)),),
    )
    server = Machine("Server", (Flow("Msg", {T, RC, P}),))
    arcs = (
        FlowArc(ref("Device.Msg.create"), ref("Device.Msg.process"), 1),
        FlowArc(ref("Device.Msg.process"), ref("Device.Msg.release")),
        FlowArc(ref("Device.Msg.release"), ref("Device.Msg.transfer")),
        FlowArc(ref("Device.Msg.transfer"), ref("Server.Msg.transfer"), 2),
        FlowArc(ref("Device.Antenna.Nav.transfer"), ref("Device.Antenna.Nav.receive")),
    )
    trig = (TriggerArc(ref("Server.Msg.process"), ref("Device.Msg.create"), 3, "again"),)
    return Model("Small", (device, server), arcs, trig)


def test_stage_kind_has_exactly_five_members():
    assert [k.value for k in StageKind] == ["create", "process", "release", "receive", "transfer"]
    assert not hasattr(StageKind, "ARRIVE")
    assert not hasattr(StageKind, "ACCEPT")


def test_stage_kind_parse():
    assert StageKind.parse("transfer") is T
    for bad in ("arrive", "accept", "Transfer"):
        with pytest.raises(ValueError):
            StageKind.parse(bad)


def test_natural_key_orders_numeric_suffixes():
    assert sorted(["E10", "E2", "E1"], key=natural_key) == ["E1", "E2", "E10"]


def test_flow_needs_a_stage():
    with pytest.raises(ValueError):
        Flow("Msg", set())


def test_machine_rejects_duplicate_things_and_children():
    with pytest.raises(ValueError):
        Machine("M", (Flow("X", {C}), Flow("X", {P})))
    with pytest.raises(ValueError):
        Machine("M", (), (Machine("A"), Machine("A")))


def test_stage_ref_text_round_trip():
    r = ref("Device.Antenna.Nav.receive")
    assert r.machine_path == ("Device", "Antenna")
    assert r.thing == "Nav" and r.kind is RC
    assert StageRef.parse(str(r)) == r
    with pytest.raises(ValueError):
        StageRef.parse("Nav.receive")


def test_stage_ref_ordering_follows_stage_order():
    refs = [ref("A.X.transfer"), ref("A.X.create"), ref("A.X.receive")]
    assert [r.kind for r in sorted(refs)] == [C, RC, T]


def test_flow_arc_rejects_self_loop_and_kind_change():
    with pytest.raises(ValueError):
        FlowArc(ref("A.X.create"), ref("A.X.create"))
    with pytest.raises(ValueError, match="trigger"):
        FlowArc(ref("A.X.process"), ref("A.Y.create"))
    # a trigger may change kind
    TriggerArc(ref("A.X.process"), ref("A.Y.create"))


def test_model_rejects_duplicate_roots_and_anchors():
    with pytest.raises(ValueError):
        Model("M", (Machine("A"), Machine("A")))
    arcs = (
        FlowArc(ref("A.X.create"), ref("A.X.process"), 4),
        FlowArc(ref("A.X.process"), ref("A.X.release"), 4),
    )
    with pytest.raises(ValueError):
        Model("M", (Machine("A", (Flow("X", {C, P, RL}),)),), arcs)


def test_walk_and_stage_set(small):
    assert [p for p, _ in small.walk()] == [("Device",), ("Device", "Antenna"), ("Server",)]
    assert len(small.stage_set) == 4 + 2 + 3
    assert small.size() == 9 + 5 + 1
    assert small.thing_kinds == {"Msg", "Nav"}


def test_arc_indexes(small):
    assert [a.target for a in small.flow_out(ref("Device.Msg.release"))] == [ref("Device.Msg.transfer")]
    assert small.triggers_by_name["again"].paper_anchor == 3
    assert small.triggers_in(ref("Device.Msg.create"))[0].name == "again"
    assert small.flow_arcs[3].crosses_machines
    assert not small.flow_arcs[0].crosses_machines


def test_resolve_returns_handle(small):
    h = resolve(small, ref("Device.Antenna.Nav.receive"))
    assert h.machine.name == "Antenna"
    assert h.ref == ref("Device.Antenna.Nav.receive")


@pytest.mark.parametrize(
    "text, error",
    [
        ("Nowhere.Msg.create", UnknownMachinePath),
        ("Device.Ghost.create", UnknownThing),
        ("Device.Nav.create", StageNotDeclared),  # declared elsewhere, not here
        ("Server.Msg.create", StageNotDeclared),  # flow exists, stage does not
    ],
)
def test_resolve_errors(small, text, error):
    with pytest.raises(error) as info:
        resolve(small, ref(text))
    assert isinstance(info.value, ResolveError)
    assert info.value.ref == ref(text)


def test_dangling_refs_lists_unresolved_endpoints():
    m = Model("M", (Machine("A", (Flow("X", {C}),)),), (FlowArc(ref("A.X.create"), ref("A.X.release")),))
    assert m.dangling_refs() == [ref("A.X.release")]


def test_region_subgraph_collects_stages_and_arcs(small):
    g = region_subgraph(small, [ref("Device.Msg.create"), (ref("Device.Msg.transfer"), ref("Server.Msg.transfer"))])
    assert g.stages == {ref("Device.Msg.create")}
    assert len(g.arcs) == 1
    assert g.nodes == {ref("Device.Msg.create"), ref("Device.Msg.transfer"), ref("Server.Msg.transfer")}
    assert len(g | region_subgraph(small, [ref("Server.Msg.process")])) == 3


def test_region_subgraph_rejects_foreign_elements(small):
    with pytest.raises(ElementNotInModel):
        region_subgraph(small, [ref("Server.Msg.create")])
    with pytest.raises(ElementNotInModel):
        region_subgraph(small, [(ref("Device.Msg.create"), ref("Device.Msg.release"))])


def test_chronology_is_sorted_and_deduplicated():
    ch = Chronology((("E10", "E11"), ("E1", "E2"), ("E1", "E2")))
    assert ch.edges == (("E1", "E2"), ("E10", "E11"))
    assert ch.ids == {"E1", "E2", "E10", "E11"}
    assert Chronology((("E1", "E3"), ("E2", "E3"))).predecessors("E3") == ["E1", "E2"]
