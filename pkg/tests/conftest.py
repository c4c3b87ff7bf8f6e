import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from vanetsim.core import Position, Velocity  # noqa: E402
from vanetsim.mobility import Heading, VehicleState  # noqa: E402
from vanetsim.neighbors import Beacon, NeighborTable, deliver_beacon  # noqa: E402
from vanetsim.scenario import Scenario, scenario_from_dict  # noqa: E402

# filled by test_acceptance; printed at the end of the session
CRITERIA: dict[str, tuple[bool, str]] = {}


def vehicle(vid=0, pos=(0.0, 0.0), vel=(0.0, 0.0), heading=Heading.EAST, road=("h", 0), lane=0,
            target=(0.0, 0.0), max_speed=None):
    speed = max_speed if max_speed is not None else Velocity(*vel).speed
    return VehicleState(vid, Position(*pos), Velocity(*vel), lane, road, heading,
                        Position(*target), speed)


def table_of(owner, neighbors, now=0.0):
    """Neighbor table from (id, pos, vel) triples."""
    t = NeighborTable(owner)
    for nid, pos, vel in neighbors:
        deliver_beacon(t, Beacon(nid, Position(*pos), Velocity(*vel), now), now)
    return t


def static_pair(gap: float, ttl: float = 5.0) -> tuple[Scenario, list[VehicleState]]:
    """Two parked vehicles on the eastbound lane of a single-cross grid, ``gap`` m apart."""
    s = scenario_from_dict({
        "n_vehicles": 2, "n_senders": 1, "cbr_rate": 0.1, "sim_duration": 10.0, "ttl": ttl,
        "mobility": {"h_roads": 1, "v_roads": 1, "speed_max": 0.0},
    })
    y = 500.0 - 1.75
    states = [vehicle(0, pos=(100.0, y), target=(100.0, 500.0)),
              vehicle(1, pos=(100.0 + gap, y), target=(100.0 + gap, 500.0))]
    return s, states


@pytest.fixture
def make_vehicle():
    return vehicle


@pytest.fixture
def make_table():
    return table_of


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(CRITERIA, key=lambda k: int(k.split()[0])):
        ok, detail = CRITERIA[name]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
