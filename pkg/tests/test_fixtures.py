import hashlib
import re

import pytest

from tmkit.fixtures import BUNDLES, SCENARIOS, UnknownFixture, builtin_bundle, builtin_scenario, fixture, read_text
from tmkit.sim import run

ANTI_THEFT_LABELS = [
    "Logging in with username and password.",
    "Opening a session.",
    "Requesting an account in the vehicle-tracking system.",
    "Requesting IMEI and other information.",
    "IMEI and other information are received.",
    "Displaying the tracking system menu.",
    "Selecting current vehicle location.",
    "Finding the latest vehicle coordinates and constructing a map that is displayed.",
    "Selecting alert radius.",
    "Creating proximity alert, setting it and sending a confirmation message.",
    "The alert is enabled.",
    "Alert map is displayed.",
]

FLEET_LABELS = [
    "Parameters are originated from the vehicle.",
    "The tracking device creates data.",
    "Satellites send data.",
    "Satellite data are received.",
    "Coordinates are calculated.",
    "Tracking device message is created.",
    "Tracking message arrives to the server.",
    "The data of the message are formatted.",
    "The tracking system is operational.",
    "The message arrives to the tracking system.",
    "Time, ignition status, coordinates and device ID are used by the map engine.",
    "Temperature, speed and acceleration generate alerts that are displayed and sent to the driver.",
    "The user feeds new user information.",
    "The operator requests updating the device status.",
    "The server updates new information.",
    "The server receives the operator's request to update device status.",
    "The device receives the new status.",
    "The device updates the status.",
]

# expected precedence, written by hand from the two event sequences
ANTI_THEFT_ORDER = {
    ("E1", "E2"), ("E2", "E3"), ("E3", "E4"), ("E4", "E5"), ("E5", "E6"),
    ("E6", "E7"), ("E7", "E8"),
    ("E6", "E9"), ("E9", "E10"), ("E10", "E11"), ("E11", "E12"),
}
FLEET_ORDER = {
    ("E1", "E2"), ("E2", "E6"), ("E3", "E4"), ("E4", "E5"), ("E5", "E6"),
    ("E6", "E7"), ("E7", "E8"), ("E8", "E9"), ("E9", "E10"), ("E10", "E11"), ("E10", "E12"),
    ("E13", "E15"), ("E14", "E16"), ("E16", "E17"), ("E17", "E18"),
}


@pytest.mark.parametrize(
    "name, labels", [("anti_theft", ANTI_THEFT_LABELS), ("fleet_tracking", FLEET_LABELS)]
)
def test_event_labels(name, labels):
    events = builtin_bundle(name).events
    assert [e.id for e in events] == [f"E{i}" for i in range(1, len(labels) + 1)]
    assert [e.label for e in events] == labels


@pytest.mark.parametrize("name, order", [("anti_theft", ANTI_THEFT_ORDER), ("fleet_tracking", FLEET_ORDER)])
def test_declared_chronology(name, order):
    assert set(builtin_bundle(name).chronology.edges) == order


def test_fleet_size():
    m = builtin_bundle("fleet_tracking").model
    assert len(m.stage_set) == 157
    assert (len(m.flow_arcs), len(m.trigger_arcs)) == (138, 28)
    assert {r.name for r in m.root_machines} == {
        "Vehicle", "Satellites", "TrackingDevice", "TrackingServer", "TrackingSystem", "Operator", "Driver",
    }


def anchors(model):
    return sorted(a.paper_anchor for a in model.arcs if a.paper_anchor is not None)


def noted_absent(name):
    text = read_text(fixture(name).notes_file)
    return {int(m) for m in re.findall(r"^\s*(\d+)\s", text, re.M)}


@pytest.mark.parametrize("name", sorted(BUNDLES))
def test_anchors_cover_the_numbering(name):
    found = anchors(builtin_bundle(name).model)
    assert len(found) == len(set(found))
    top = max(found)
    assert set(found) | noted_absent(name) == set(range(1, top + 1))
    assert not set(found) & noted_absent(name)


def test_specific_anchor_notes():
    assert noted_absent("fleet_tracking") == {1, 2, 15, 36, 37, 38}
    assert noted_absent("anti_theft") == {19}


@pytest.mark.parametrize("name", sorted(SCENARIOS))
def test_bundled_scenarios_run(name):
    bundle = builtin_bundle(SCENARIOS[name])
    trace = run(bundle.model, builtin_scenario(name), bundle.events)
    assert trace.halted == "quiescent"


def test_bundle_name_selects_default_scenario():
    assert builtin_scenario("fleet_tracking") == builtin_scenario("fleet_day")
    assert builtin_scenario("anti_theft") == builtin_scenario("anti_theft_login")


def test_unknown_fixture():
    with pytest.raises(UnknownFixture):
        builtin_bundle("nope")
    with pytest.raises(UnknownFixture):
        builtin_scenario("nope")
    with pytest.raises(KeyError):
        fixture("nope")


def test_bundles_are_cached():
    assert builtin_bundle("anti_theft") is builtin_bundle("anti_theft")


# fixture files are frozen; regenerating one means reviewing the diff and updating its hash here
GOLDEN = {
    "anti_theft.tm": "56c0929ad0f2eb5ef1860f0ca14421cae244e7d488a0ac7a95df74f8cf0561a6",
    "anti_theft.notes.txt": "00ae923af20a344f4e193034d79ace3f3c5addbd7d56270d4fb35dfb8922adfd",
    "anti_theft_login.scn": "d4128886d87ac3c927523ad970c244109956626fe09ec6c6886617ba9682dff1",
    "fleet_tracking.tm": "b2a5376ce57382c7598a40ae034bd3c089fb191c7da928912075bddfdab7ff59",
    "fleet_tracking.notes.txt": "3231e8573ac77c4afba47d75e576862935e84de7d19088051d6d9aed65a09d30",
    "fleet_day.scn": "fe70873b5971b29db0baa035934798a9d4c42dbf1136d2fc6843df02ea078afc",
    "fleet_alerts.scn": "374955cefafc0a11a7d4daa2fd015d436e89df4a896a89c21c325221e1ab0a09",
    "fleet_normal.scn": "ebe9fa55a7655d45dd15e4ce29d66488ed4ae94521015ca3f87c565e8df8281f",
}


@pytest.mark.parametrize("filename", sorted(GOLDEN))
def test_fixture_files_are_frozen(filename):
    assert hashlib.sha256(read_text(filename).encode("utf-8")).hexdigest() == GOLDEN[filename]
