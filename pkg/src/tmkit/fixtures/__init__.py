"""Bundled case-study models and scenarios.

``anti_theft`` is a login-and-alert web application; ``fleet_tracking`` is a
vehicle telematics pipeline from sensors through a tracking server to an
operator interface.  Both are frozen ``.tm`` files under ``data/``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

from ..dsl import ParsedBundle, parse
from ..sim.scenario import Scenario, load_scenario

__all__ = [
    "BUNDLES",
    "SCENARIOS",
    "Fixture",
    "UnknownFixture",
    "builtin_bundle",
    "builtin_scenario",
    "fixture",
    "read_text",
]


class UnknownFixture(KeyError):
    def __init__(self, name: str, known) -> None:
        super().__init__(f"no bundled fixture {name!r}; known: {', '.join(sorted(known))}")
        self.name = name

    def __str__(self) -> str:
        return self.args[0]


@dataclass(frozen=True)
class Fixture:
    name: str
    model_file: str
    notes_file: str
    default_scenario: str


BUNDLES = {
    "anti_theft": Fixture("anti_theft", "anti_theft.tm", "anti_theft.notes.txt", "anti_theft_login"),
    "fleet_tracking": Fixture("fleet_tracking", "fleet_tracking.tm", "fleet_tracking.notes.txt", "fleet_day"),
}

# scenario -> bundle it runs against
SCENARIOS = {
    "anti_theft_login": "anti_theft",
    "fleet_day": "fleet_tracking",
    "fleet_alerts": "fleet_tracking",
    "fleet_normal": "fleet_tracking",
}


def read_text(filename: str) -> str:
    return resources.files(__name__).joinpath("data", filename).read_text(encoding="utf-8")


def fixture(name: str) -> Fixture:
    try:
        return BUNDLES[name]
    except KeyError:
        raise UnknownFixture(name, BUNDLES) from None


@lru_cache(maxsize=None)
def builtin_bundle(name: str) -> ParsedBundle:
    return parse(read_text(fixture(name).model_file))


def builtin_scenario(name: str) -> Scenario:
    """Load a bundled scenario; a bundle name selects that bundle's default."""
    if name in BUNDLES:
        name = BUNDLES[name].default_scenario
    if name not in SCENARIOS:
        raise UnknownFixture(name, SCENARIOS)
    return load_scenario(read_text(f"{name}.scn"), builtin_bundle(SCENARIOS[name]).model)
