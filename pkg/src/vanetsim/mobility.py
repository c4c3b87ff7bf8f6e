"""Lane-structured grid mobility ("revival" model).

Vehicles drive along horizontal (east/west) and vertical (north/south) roads,
keep a security distance to the vehicle ahead in their lane, overtake through
a free adjacent lane when one exists, and turn at intersections along the
shortest road path to a personal trip target.
"""

from __future__ import annotations

import csv
import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from vanetsim.core import NodeId, Position, Velocity

MAX_SPEED_CAP = 25.0
_TOL = 1e-6


class Heading(str, Enum):
    NORTH = "north"
    EAST = "east"
    SOUTH = "south"
    WEST = "west"

    @property
    def unit(self) -> tuple[int, int]:
        return _UNIT[self]

    @property
    def axis(self) -> str:
        return _AXIS[self]

    @property
    def sign(self) -> int:
        return _SIGN[self]

    @property
    def reverse(self) -> Heading:
        return _REVERSE[self]


_UNIT = {Heading.NORTH: (0, 1), Heading.EAST: (1, 0), Heading.SOUTH: (0, -1), Heading.WEST: (-1, 0)}
_REVERSE = {Heading.NORTH: Heading.SOUTH, Heading.SOUTH: Heading.NORTH,
            Heading.EAST: Heading.WEST, Heading.WEST: Heading.EAST}
_AXIS = {Heading.NORTH: "v", Heading.SOUTH: "v", Heading.EAST: "h", Heading.WEST: "h"}
_SIGN = {Heading.NORTH: 1, Heading.EAST: 1, Heading.SOUTH: -1, Heading.WEST: -1}
# tie-break order for equally short routes
TURN_PRIORITY = (Heading.NORTH, Heading.EAST, Heading.SOUTH, Heading.WEST)

Road = tuple  # ("h" | "v", index)


@dataclass(frozen=True)
class MobilityConfig:
    security_distance: float = 10.0
    overtaking_enabled: bool = True
    speed_range: tuple[float, float] = (0.0, 25.0)
    tick: float = 0.1

    def __post_init__(self):
        lo, hi = self.speed_range
        if not self.security_distance > 0:
            raise ValueError("security_distance must be positive")
        if lo < 0 or hi < lo:
            raise ValueError("speed_range must satisfy 0 <= min <= max")
        if hi > MAX_SPEED_CAP:
            raise ValueError(f"max speed must not exceed {MAX_SPEED_CAP} m/s")
        if not self.tick > 0:
            raise ValueError("tick must be positive")


@dataclass(frozen=True, slots=True)
class VehicleState:
    id: NodeId
    pos: Position
    vel: Velocity
    lane: int
    road: Road
    heading: Heading
    trip_target: Position
    max_speed: float

    @property
    def lane_key(self) -> tuple:
        return (self.road[0], self.road[1], self.heading.value, self.lane)

    @property
    def progress(self) -> float:
        """Along-road coordinate signed so that it grows in the travel direction."""
        return (self.pos[0] if self.road[0] == "h" else self.pos[1]) * _SIGN[self.heading]


@dataclass(frozen=True, eq=False)
class RoadNetwork:
    width: float
    height: float
    horizontal_roads: tuple[float, ...]
    vertical_roads: tuple[float, ...]
    lanes_per_direction: int = 1
    lane_width: float = 3.5
    _graph: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        if not (self.width > 0 and self.height > 0):
            raise ValueError("area must have positive width and height")
        if not self.horizontal_roads or not self.vertical_roads:
            raise ValueError("need at least one horizontal and one vertical road")
        if self.lanes_per_direction < 1:
            raise ValueError("lanes_per_direction must be at least 1")
        for name, roads, limit in (("horizontal", self.horizontal_roads, self.height),
                                   ("vertical", self.vertical_roads, self.width)):
            if len(set(roads)) != len(roads):
                raise ValueError(f"{name} roads must be distinct")
            span = self.lanes_per_direction * self.lane_width
            for r in roads:
                if r - span < 0 or r + span > limit:
                    raise ValueError(f"{name} road at {r} does not fit inside the area")
        object.__setattr__(self, "_graph", _build_graph(self))

    # -- geometry along roads -------------------------------------------
    def road_coord(self, road: Road) -> float:
        axis, idx = road
        return self.horizontal_roads[idx] if axis == "h" else self.vertical_roads[idx]

    def road_length(self, road: Road) -> float:
        return self.width if road[0] == "h" else self.height

    def crossings(self, road: Road) -> tuple[float, ...]:
        """Along-road coordinates of the intersections on ``road`` (sorted)."""
        return self._graph["crossings"][road[0]]

    def lane_offset(self, heading: Heading, lane: int) -> float:
        # right-hand traffic: lane 0 is next to the centerline
        off = (lane + 0.5) * self.lane_width
        return -off if heading in (Heading.EAST, Heading.SOUTH) else off

    def lane_point(self, road: Road, heading: Heading, lane: int, s: float) -> Position:
        c = self.road_coord(road) + self.lane_offset(heading, lane)
        return Position(s, c) if road[0] == "h" else Position(c, s)

    def roads(self) -> list[Road]:
        return [("h", i) for i in range(len(self.horizontal_roads))] + \
               [("v", i) for i in range(len(self.vertical_roads))]

    def headings_for(self, road: Road) -> tuple[Heading, Heading]:
        return (Heading.EAST, Heading.WEST) if road[0] == "h" else (Heading.NORTH, Heading.SOUTH)

    def lanes(self) -> list[tuple[Road, Heading, int]]:
        return [(road, h, k) for road in self.roads() for h in self.headings_for(road)
                for k in range(self.lanes_per_direction)]

    def total_lane_length(self) -> float:
        return sum(self.road_length(r) for r, _, _ in self.lanes())

    def roads_through(self, p: Position) -> list[tuple[Road, float]]:
        """Roads whose centerline contains ``p``, with p's along-road coordinate."""
        cache = self._graph["through"]
        hit = cache.get(p)
        if hit is None:
            hit = cache[p] = self._roads_through(p)
        return hit

    def _roads_through(self, p: Position) -> list[tuple[Road, float]]:
        out = []
        for i, y in enumerate(self.horizontal_roads):
            if abs(p[1] - y) <= _TOL and -_TOL <= p[0] <= self.width + _TOL:
                out.append((("h", i), p[0]))
        for i, x in enumerate(self.vertical_roads):
            if abs(p[0] - x) <= _TOL and -_TOL <= p[1] <= self.height + _TOL:
                out.append((("v", i), p[1]))
        return out

    def nearest_intersection(self, p: Position) -> Position:
        x = min(self.vertical_roads, key=lambda v: abs(v - p[0]))
        y = min(self.horizontal_roads, key=lambda h: abs(h - p[1]))
        return Position(x, y)

    # -- shortest paths ---------------------------------------------------
    def path_length(self, start: Position, target: Position) -> float:
        """Road-network distance from graph node ``start`` to a point on a road."""
        g = self._graph
        i = g["index"][_key(start)]
        best = math.inf
        for road, t in self.roads_through(target):
            stops = g["stops"][road]
            k = bisect_left(stops, t - _TOL)
            # graph nodes bracketing the target along its road
            for j in {max(k - 1, 0), min(k, len(stops) - 1), min(bisect_right(stops, t + _TOL), len(stops) - 1)}:
                s = stops[j]
                node = g["index"][_key(self._stop_point(road, s))]
                best = min(best, g["dist"][i, node] + abs(s - t))
        return best

    def _stop_point(self, road: Road, s: float) -> Position:
        c = self.road_coord(road)
        return Position(s, c) if road[0] == "h" else Position(c, s)


def _key(p) -> tuple[float, float]:
    return (round(p[0], 6), round(p[1], 6))


def _build_graph(net: RoadNetwork) -> dict:
    crossings = {"h": tuple(sorted(net.vertical_roads)), "v": tuple(sorted(net.horizontal_roads))}
    stops: dict = {}
    index: dict = {}
    edges = []
    for road in net.roads():
        s_list = sorted({0.0, net.road_length(road), *crossings[road[0]]})
        stops[road] = s_list
        pts = [net._stop_point(road, s) for s in s_list]
        for p in pts:
            index.setdefault(_key(p), len(index))
        for a, b, sa, sb in zip(pts, pts[1:], s_list, s_list[1:]):
            edges.append((index[_key(a)], index[_key(b)], sb - sa))
    n = len(index)
    rows = [e[0] for e in edges] + [e[1] for e in edges]
    cols = [e[1] for e in edges] + [e[0] for e in edges]
    w = [e[2] for e in edges] * 2
    dist = shortest_path(csr_matrix((w, (rows, cols)), shape=(n, n)), directed=False)
    return {"crossings": crossings, "stops": stops, "index": index, "dist": dist, "through": {}}


def build_road_network(area: tuple[float, float], h_count: int, v_count: int, lanes: int = 1,
                       lane_width: float = 3.5) -> RoadNetwork:
    """Evenly spaced grid: road k of n sits at ``size / (n + 1) * k``."""
    width, height = area
    if not (width > 0 and height > 0):
        raise ValueError("area must have positive width and height")
    if h_count < 1 or v_count < 1:
        raise ValueError("need at least one horizontal and one vertical road")
    hs = tuple(height / (h_count + 1) * k for k in range(1, h_count + 1))
    vs = tuple(width / (v_count + 1) * k for k in range(1, v_count + 1))
    return RoadNetwork(width, height, hs, vs, lanes, lane_width)


def random_target(net: RoadNetwork, rng: np.random.Generator) -> Position:
    """Uniform point on the union of road centerlines."""
    roads = net.roads()
    lengths = np.array([net.road_length(r) for r in roads])
    road = roads[int(rng.choice(len(roads), p=lengths / lengths.sum()))]
    s = float(rng.uniform(0.0, net.road_length(road)))
    return net._stop_point(road, s)


def _velocity(heading: Heading, speed: float) -> Velocity:
    ux, uy = heading.unit
    return Velocity(ux * speed, uy * speed)


def spawn_vehicles(net: RoadNetwork, n: int, cfg: MobilityConfig,
                   seed: int | np.random.Generator) -> list[VehicleState]:
    """Place ``n`` vehicles uniformly along the lanes, at least one security distance apart."""
    if n < 1:
        raise ValueError("need at least one vehicle")
    sd = cfg.security_distance
    if n * sd > net.total_lane_length():
        raise ValueError(f"{n} vehicles need {n * sd} m of lane at security distance {sd} m, "
                         f"network has {net.total_lane_length()} m")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    lanes = net.lanes()
    lengths = np.array([net.road_length(r) for r, _, _ in lanes])
    capacity = np.floor(lengths / sd).astype(int) + 1
    for _ in range(10_000):
        counts = rng.multinomial(n, lengths / lengths.sum())
        if np.all(counts <= capacity):
            break
    else:
        raise ValueError("could not place vehicles within per-lane capacity")

    placed = []
    for (road, heading, lane), k, length in zip(lanes, counts, lengths):
        if k == 0:
            continue
        # uniform over configurations with min spacing sd
        free = length - (k - 1) * sd
        base = np.sort(rng.uniform(0.0, free, size=k))
        for j, u in enumerate(base):
            placed.append((road, heading, lane, float(u + j * sd)))

    ids = rng.permutation(n)
    lo, hi = cfg.speed_range
    out = []
    for vid, (road, heading, lane, s) in zip(ids, placed):
        speed = float(rng.uniform(lo, hi))
        out.append(VehicleState(int(vid), net.lane_point(road, heading, lane, s),
                                _velocity(heading, speed), lane, road, heading,
                                random_target(net, rng), speed))
    out.sort(key=lambda v: v.id)
    return out


def _heading_costs(pos: Position, target: Position, net: RoadNetwork) -> list[tuple[float, Heading]]:
    """Route length via each heading available at intersection ``pos``."""
    costs = []
    for h in TURN_PRIORITY:
        road_coord = pos[0] if h.axis == "v" else pos[1]
        roads = net.vertical_roads if h.axis == "v" else net.horizontal_roads
        road = (h.axis, roads.index(road_coord))
        s0 = pos[1] if h.axis == "v" else pos[0]
        stops = net._graph["stops"][road]
        if h.sign > 0:
            nxt = [s for s in stops if s > s0 + _TOL]
        else:
            nxt = [s for s in stops if s < s0 - _TOL][::-1]
        if not nxt:
            continue
        s1 = nxt[0]
        lo, hi = min(s0, s1), max(s0, s1)
        direct = [t for r, t in net.roads_through(target) if r == road and lo - _TOL <= t <= hi + _TOL]
        if direct:
            cost = abs(direct[0] - s0)
        else:
            cost = abs(s1 - s0) + net.path_length(net._stop_point(road, s1), target)
        costs.append((cost, h))
    return costs


def choose_direction(v: VehicleState, net: RoadNetwork) -> Heading:
    """Outgoing heading on the shortest road path from the intersection to the trip target.

    Ties go north, east, south, west in that order. A target sitting on the
    intersection itself keeps the current heading.
    """
    here = net.nearest_intersection(v.pos)
    if math.dist(here, v.trip_target) <= _TOL:
        return v.heading
    costs = _heading_costs(here, v.trip_target, net)
    best = min(c for c, _ in costs)
    for c, h in costs:  # already in priority order
        if c <= best + 1e-9:
            return h
    return v.heading


class _Occupancy:
    """Live per-lane progress values, used while a tick is being computed."""

    def __init__(self, states: Iterable[VehicleState], net: RoadNetwork):
        self.net = net
        self.lanes: dict[tuple, dict[NodeId, float]] = {}
        for s in states:
            self.add(s.lane_key, s.id, s.progress)

    def add(self, key, vid, p):
        self.lanes.setdefault(key, {})[vid] = p

    def remove(self, key, vid):
        self.lanes[key].pop(vid, None)

    def leader(self, key, vid, p):
        best = None
        for other, q in self.lanes.get(key, {}).items():
            if other != vid and q >= p and (best is None or q < best[1]):
                best = (other, q)
        return best

    def clear(self, key, lo, hi, vid):
        return all(not (lo < q < hi) for other, q in self.lanes.get(key, {}).items() if other != vid)


def _key_of(road, heading, lane):
    return (road[0], road[1], heading.value, lane)


def step(states: list[VehicleState], net: RoadNetwork, cfg: MobilityConfig,
         rng: np.random.Generator) -> list[VehicleState]:
    """Advance every vehicle by one tick; returns new states in the input order."""
    dt, sd = cfg.tick, cfg.security_distance
    cur = {s.id: s for s in states}
    occ = _Occupancy(states, net)
    order = sorted(states, key=lambda s: (s.lane_key, -s.progress))
    for v in order:
        new = _advance(v, cur, occ, net, cfg, rng, dt, sd)
        occ.remove(v.lane_key, v.id)
        occ.add(new.lane_key, new.id, new.progress)
        cur[v.id] = new
    return [cur[s.id] for s in states]


def _advance(v, cur, occ, net, cfg, rng, dt, sd) -> VehicleState:
    key = v.lane_key
    p = v.progress
    road, heading, lane = v.road, v.heading, v.lane
    speed = v.max_speed
    travel = speed * dt

    lead = occ.leader(key, v.id, p)
    if lead is not None and lead[1] - (p + travel) < sd:
        switched = False
        if cfg.overtaking_enabled:
            for adj in (lane + 1, lane - 1):
                if 0 <= adj < net.lanes_per_direction and \
                        occ.clear(_key_of(road, heading, adj), p - sd, p + travel + sd, v.id):
                    lane, switched = adj, True
                    break
        if not switched:
            speed = min(speed, cur[lead[0]].vel.speed)
            travel = min(speed * dt, max(0.0, lead[1] - sd - p))

    target = v.trip_target
    s_old = p * heading.sign
    new_p = p + travel

    # intersection on the way
    sign = _SIGN[heading]
    hit = [c * sign for c in net.crossings(road) if p < c * sign <= new_p]
    if hit:
        c = min(hit)
        s_c = c * heading.sign
        here = net.lane_point(road, heading, lane, s_c)
        inter = net.nearest_intersection(here)
        if _reached(net, road, target, s_old, s_c):
            target = random_target(net, rng)
        probe = replace(v, pos=inter, trip_target=target, heading=heading)
        if math.dist(inter, target) <= _TOL:
            target = random_target(net, rng)
            want = heading
        else:
            want = choose_direction(probe, net)
        if want != heading:
            new_road = (want.axis, (net.vertical_roads if want.axis == "v"
                                    else net.horizontal_roads).index(inter[0] if want.axis == "v" else inter[1]))
            new_lane = min(lane, net.lanes_per_direction - 1)
            s_entry = inter[1] if want.axis == "v" else inter[0]
            e = s_entry * want.sign + (new_p - c)
            new_key = _key_of(new_road, want, new_lane)
            if occ.clear(new_key, e - sd, e + sd, v.id):
                s_new = e * want.sign
                if _reached(net, new_road, target, s_entry, s_new):
                    target = random_target(net, rng)
                return VehicleState(v.id, net.lane_point(new_road, want, new_lane, s_new),
                                    _velocity(want, speed), new_lane, new_road, want,
                                    target, v.max_speed)
        # go straight: own lane is always admissible
        s_old = s_c

    end = net.road_length(road) if heading.sign > 0 else 0.0
    end_p = end * heading.sign
    if new_p >= end_p:
        new_p = end_p
        back = heading.reverse
        back_key = _key_of(road, back, lane)
        e = end * back.sign
        if _reached(net, road, target, s_old, end):
            target = random_target(net, rng)
        if occ.clear(back_key, e - sd, e + sd, v.id):
            return VehicleState(v.id, net.lane_point(road, back, lane, end), _velocity(back, speed),
                                lane, road, back, target, v.max_speed)
        return VehicleState(v.id, net.lane_point(road, heading, lane, end), Velocity(0.0, 0.0),
                            lane, road, heading, target, v.max_speed)

    s_new = new_p * heading.sign
    if _reached(net, road, target, s_old, s_new):
        target = random_target(net, rng)
    return VehicleState(v.id, net.lane_point(road, heading, lane, s_new), _velocity(heading, speed),
                        lane, road, heading, target, v.max_speed)


def _reached(net, road, target, s_from, s_to) -> bool:
    """True if ``target`` lies on ``road`` between along-road coordinates s_from..s_to."""
    if s_from == s_to:
        return False
    lo, hi = min(s_from, s_to), max(s_from, s_to)
    return any(r == road and lo - _TOL <= t <= hi + _TOL for r, t in net.roads_through(target))


def write_trace(rows: Iterable[tuple[float, list[VehicleState]]], path) -> None:
    """Per-tick trajectory CSV with columns time, id, x, y, vx, vy."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time", "id", "x", "y", "vx", "vy"])
        for t, states in rows:
            for s in states:
                w.writerow([repr(t), s.id, repr(s.pos[0]), repr(s.pos[1]), repr(s.vel[0]), repr(s.vel[1])])
