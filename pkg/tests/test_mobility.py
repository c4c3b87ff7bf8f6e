import csv
import math

import numpy as np
import pytest

from vanetsim.core import Position, Velocity
from vanetsim.mobility import (Heading, MobilityConfig, RoadNetwork, VehicleState,
                               build_road_network, choose_direction, spawn_vehicles, step,
                               write_trace)

AREA = (1000.0, 1000.0)


def on_lane(net, heading, lane, road, s, speed, target, vid=0):
    pos = net.lane_point(road, heading, lane, s)
    ux, uy = heading.unit
    return VehicleState(vid, pos, Velocity(ux * speed, uy * speed), lane, road, heading,
                        Position(*target), speed)


def lateral_error(net, v):
    """Distance from v to the nearest lane centerline of its road."""
    c = net.road_coord(v.road)
    lines = [c + net.lane_offset(h, k) for h in net.headings_for(v.road)
             for k in range(net.lanes_per_direction)]
    across = v.pos[1] if v.road[0] == "h" else v.pos[0]
    return min(abs(across - y) for y in lines)


def test_even_grid():
    net = build_road_network(AREA, 2, 2)
    assert net.horizontal_roads == pytest.approx((1000 / 3, 2000 / 3))
    assert net.vertical_roads == pytest.approx((1000 / 3, 2000 / 3))


def test_single_cross():
    net = build_road_network(AREA, 1, 1)
    assert (net.vertical_roads[0], net.horizontal_roads[0]) == (500.0, 500.0)
    assert net.nearest_intersection(Position(480, 530)) == (500.0, 500.0)


def test_no_roads_rejected():
    with pytest.raises(ValueError):
        build_road_network(AREA, 0, 2)


def test_road_outside_area_rejected():
    with pytest.raises(ValueError):
        RoadNetwork(100, 100, (1.0,), (50.0,))


def test_config_validation():
    with pytest.raises(ValueError):
        MobilityConfig(security_distance=0)
    with pytest.raises(ValueError):
        MobilityConfig(speed_range=(0, 30))
    with pytest.raises(ValueError):
        MobilityConfig(speed_range=(10, 5))


def test_spawn_deterministic():
    net = build_road_network(AREA, 3, 3)
    cfg = MobilityConfig()
    assert spawn_vehicles(net, 20, cfg, 42) == spawn_vehicles(net, 20, cfg, 42)
    assert spawn_vehicles(net, 20, cfg, 42) != spawn_vehicles(net, 20, cfg, 43)


def test_spawn_capacity_error():
    net = RoadNetwork(10.0, 10.0, (5.0,), (5.0,))
    with pytest.raises(ValueError):
        spawn_vehicles(net, 2, MobilityConfig(security_distance=100), 0)


def test_spawn_on_centerlines_with_headway():
    net = build_road_network(AREA, 3, 3)
    cfg = MobilityConfig()
    vs = spawn_vehicles(net, 100, cfg, 7)
    assert sorted(v.id for v in vs) == list(range(100))
    for v in vs:
        assert lateral_error(net, v) <= 1e-6
        assert 0 <= v.vel.speed <= 25
    _assert_headway(vs, cfg.security_distance)


def _assert_headway(vs, sd):
    lanes = {}
    for v in vs:
        lanes.setdefault(v.lane_key, []).append(v.progress)
    for ps in lanes.values():
        ps.sort()
        assert all(b - a >= sd - 1e-6 for a, b in zip(ps, ps[1:]))


def test_single_vehicle_kinematics():
    net = build_road_network(AREA, 1, 1)
    v = on_lane(net, Heading.EAST, 0, ("h", 0), 100.0, 10.0, (900, 500))
    (w,) = step([v], net, MobilityConfig(tick=0.5), np.random.default_rng(0))
    assert w.pos[0] - v.pos[0] == pytest.approx(5.0)
    assert w.pos[1] == v.pos[1]


def test_follower_clamped_to_leader_speed():
    net = build_road_network(AREA, 1, 1)
    cfg = MobilityConfig(security_distance=50, overtaking_enabled=False)
    leader = on_lane(net, Heading.EAST, 0, ("h", 0), 130.0, 5.0, (900, 500), vid=1)
    follower = on_lane(net, Heading.EAST, 0, ("h", 0), 100.0, 20.0, (900, 500), vid=2)
    lead2, fol2 = step([leader, follower], net, cfg, np.random.default_rng(0))
    assert fol2.vel.speed == pytest.approx(leader.vel.speed)
    assert fol2.pos[0] == pytest.approx(follower.pos[0])  # already inside the gap, holds position
    assert lead2.pos[0] == pytest.approx(130.5)


def test_opposite_lanes_independent():
    net = build_road_network(AREA, 1, 1)
    cfg = MobilityConfig()
    east = on_lane(net, Heading.EAST, 0, ("h", 0), 100.0, 20.0, (480, 500), vid=0)
    west = on_lane(net, Heading.WEST, 0, ("h", 0), 400.0, 20.0, (20, 500), vid=1)
    rng = np.random.default_rng(0)
    states = [east, west]
    for _ in range(100):
        states = step(states, net, cfg, rng)
        e, w = states
        assert e.heading is Heading.EAST and w.heading is Heading.WEST
        assert e.vel.speed == pytest.approx(20) and w.vel.speed == pytest.approx(20)
        assert abs(e.pos[1] - w.pos[1]) == pytest.approx(3.5)
    assert states[0].pos[0] == pytest.approx(300.0)
    assert states[1].pos[0] == pytest.approx(200.0)


def test_choose_direction_east():
    net = build_road_network(AREA, 1, 1)
    v = on_lane(net, Heading.NORTH, 0, ("v", 0), 500.0, 10.0, (900, 500))
    assert choose_direction(v, net) is Heading.EAST


def test_choose_direction_target_at_intersection_keeps_heading():
    net = build_road_network(AREA, 1, 1)
    v = on_lane(net, Heading.SOUTH, 0, ("v", 0), 500.0, 10.0, (500, 500))
    assert choose_direction(v, net) is Heading.SOUTH


def test_choose_direction_tie_goes_north():
    net = build_road_network(AREA, 2, 2)
    a, b = net.vertical_roads
    v = on_lane(net, Heading.WEST, 0, ("h", 0), a, 10.0, (b, net.horizontal_roads[1]))
    # both north-then-east and east-then-north cover the same distance
    assert choose_direction(v, net) is Heading.NORTH


def test_overtakes_through_free_lane():
    net = build_road_network(AREA, 1, 1, lanes=2)
    cfg = MobilityConfig(security_distance=10)
    slow = on_lane(net, Heading.EAST, 0, ("h", 0), 108.0, 2.0, (480, 500), vid=1)
    fast = on_lane(net, Heading.EAST, 0, ("h", 0), 100.0, 20.0, (480, 500), vid=2)
    _, f = step([slow, fast], net, cfg, np.random.default_rng(0))
    assert f.lane == 1
    assert f.vel.speed == pytest.approx(20.0)
    assert f.pos[0] == pytest.approx(102.0)
    assert lateral_error(net, f) <= 1e-6


def test_no_overtake_when_disabled():
    net = build_road_network(AREA, 1, 1, lanes=2)
    cfg = MobilityConfig(security_distance=10, overtaking_enabled=False)
    slow = on_lane(net, Heading.EAST, 0, ("h", 0), 108.0, 2.0, (480, 500), vid=1)
    fast = on_lane(net, Heading.EAST, 0, ("h", 0), 100.0, 20.0, (480, 500), vid=2)
    _, f = step([slow, fast], net, cfg, np.random.default_rng(0))
    assert f.lane == 0 and f.vel.speed == pytest.approx(2.0)


def test_u_turn_at_area_edge():
    net = build_road_network(AREA, 1, 1)
    v = on_lane(net, Heading.EAST, 0, ("h", 0), 999.5, 10.0, (20, 500))
    (w,) = step([v], net, MobilityConfig(), np.random.default_rng(0))
    assert w.heading is Heading.WEST
    assert 0 <= w.pos[0] <= 1000


def test_short_run_invariants():
    net = build_road_network(AREA, 3, 3, lanes=2)
    cfg = MobilityConfig()
    rng = np.random.default_rng(1)
    vs = spawn_vehicles(net, 60, cfg, 3)
    for _ in range(200):
        vs = step(vs, net, cfg, rng)
        for v in vs:
            assert 0 <= v.pos[0] <= 1000 and 0 <= v.pos[1] <= 1000
            assert 0 <= v.vel.speed <= 25 + 1e-9
            assert lateral_error(net, v) <= 1e-6
        _assert_headway(vs, cfg.security_distance)


def test_write_trace(tmp_path):
    net = build_road_network(AREA, 1, 1)
    v = on_lane(net, Heading.EAST, 0, ("h", 0), 100.0, 10.0, (900, 500))
    path = tmp_path / "t.csv"
    write_trace([(0.0, [v]), (0.1, [v])], path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["time", "id", "x", "y", "vx", "vy"]
    assert len(rows) == 3
    assert float(rows[1][2]) == v.pos[0] and math.isclose(float(rows[1][4]), 10.0)
