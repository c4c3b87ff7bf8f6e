"""Discrete-time simulation loop and per-run packet delivery metrics.

Each tick runs, in order: mobility step, beacon emission and delivery within
radio range, stale-neighbor purge, traffic injection, then routing of every
packet that is due. A forward moves a packet one hop and costs one tick.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from vanetsim import baselines, ebgr
from vanetsim.core import CARRY, Forward, NodeId, distance
from vanetsim.mobility import build_road_network, spawn_vehicles, step
from vanetsim.neighbors import (BeaconScheduler, NeighborTable, deliver_beacon, emit_beacons,
                                purge_stale)
from vanetsim.scenario import Scenario

log = logging.getLogger(__name__)

METRICS_COLUMNS = ["protocol", "n_vehicles", "radio_range", "max_speed", "seed", "sent",
                   "delivered", "dropped", "residual_buffered", "pdr", "mean_hops"]


class PacketState(str, Enum):
    IN_FLIGHT = "in_flight"
    BUFFERED = "buffered"
    DELIVERED = "delivered"
    DROPPED_TTL = "dropped_ttl"
    DROPPED_BUFFER = "dropped_buffer"

    @property
    def terminal(self) -> bool:
        return self in (PacketState.DELIVERED, PacketState.DROPPED_TTL, PacketState.DROPPED_BUFFER)


@dataclass(slots=True)
class Packet:
    id: int
    src: NodeId
    dst: NodeId
    created: float
    carrier: NodeId
    hops: int = 0
    state: PacketState = PacketState.IN_FLIGHT
    finished: float | None = None
    # table version / time of the last routing attempt while buffered
    seen_version: int = -1
    last_try: float = -math.inf
    # nodes the packet passed through since it was last buffered
    path: list[NodeId] = field(default_factory=list)


@dataclass
class RunMetrics:
    sent: int
    delivered: int
    dropped: int
    residual_buffered: int
    pdr: float
    mean_hops: float
    dropped_ttl: int = 0
    dropped_buffer: int = 0
    packets: list[Packet] = field(default_factory=list, repr=False)

    def csv_row(self, s: Scenario) -> list[str]:
        return [s.protocol, str(s.n_vehicles), repr(float(s.radio_range)),
                repr(float(s.mobility.speed_max)), str(s.seed), str(self.sent),
                str(self.delivered), str(self.dropped), str(self.residual_buffered),
                repr(self.pdr), repr(self.mean_hops)]

    def to_csv(self, s: Scenario) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(METRICS_COLUMNS)
        w.writerow(self.csv_row(s))
        return buf.getvalue()


def in_range(a, b, R: float) -> bool:
    return distance(a, b) <= R


def compute_pdr(m) -> float:
    """Percentage of generated packets that reached their destination."""
    if m.sent <= 0:
        raise ValueError("no packets were sent")
    return 100.0 * m.delivered / m.sent


def generate_traffic(s: Scenario, rng: np.random.Generator) -> list[tuple[float, NodeId, NodeId]]:
    """CBR creation events ``(time, src, dst)`` sorted by time, then source.

    Sources are drawn without replacement; each gets one random destination
    other than itself, fixed for the run.
    """
    if s.sim_duration <= 0 or s.n_senders == 0:
        return []
    ids = np.arange(s.n_vehicles)
    sources = rng.choice(ids, size=s.n_senders, replace=False)
    flows = []
    for src in sources:
        dst = int(rng.choice(ids[ids != src]))
        flows.append((int(src), dst))
    period = 1.0 / s.cbr_rate
    n_each = math.ceil(s.sim_duration / period - 1e-9)
    events = [(k * period, src, dst) for src, dst in flows for k in range(n_each)]
    events.sort(key=lambda e: (e[0], e[1]))
    return events


def _streams(seed: int):
    """Independent RNG streams for placement, mobility and traffic."""
    seq = np.random.SeedSequence(seed)
    return tuple(np.random.default_rng(c) for c in seq.spawn(3))


def road_network(s: Scenario):
    m = s.mobility
    return build_road_network((s.area_width, s.area_height), m.h_roads, m.v_roads,
                              m.lanes_per_direction, m.lane_width)


def n_ticks(s: Scenario) -> int:
    return math.ceil(s.sim_duration / s.tick - 1e-9)


def compute_trajectory(s: Scenario) -> list[list]:
    """Vehicle states at every tick of ``s``; identical to what a run would produce.

    Mobility does not depend on the routing protocol, so one trajectory can be
    shared by all protocols simulated on the same seed.
    """
    spawn_rng, mob_rng, _ = _streams(s.seed)
    net = road_network(s)
    cfg = s.mobility.config(s.tick)
    states = spawn_vehicles(net, s.n_vehicles, cfg, spawn_rng)
    out = [states]
    for _ in range(1, max(n_ticks(s), 1)):
        states = step(states, net, cfg, mob_rng)
        out.append(states)
    return out


class _EventLog:
    def __init__(self):
        self.rows: list[tuple] = []

    def add(self, pkt: Packet, event: str, t: float, node: NodeId):
        self.rows.append((pkt.id, event, t, node))

    def write(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["packet_id", "event", "time", "node"])
            for pid, ev, t, node in self.rows:
                w.writerow([pid, ev, repr(t), node])


class Simulation:
    """One deterministic run of a scenario."""

    def __init__(self, s: Scenario, *, event_log: bool = False, trace: bool = False,
                 states=None, trajectory=None, check_invariants: bool = False):
        self.s = s
        spawn_rng, self.mob_rng, traffic_rng = _streams(s.seed)
        self.net = road_network(s)
        self.mcfg = s.mobility.config(s.tick)
        self.bcfg = s.beacon.config()
        self.trajectory = trajectory
        if trajectory is not None:
            states = trajectory[0]
        elif states is None:
            states = spawn_vehicles(self.net, s.n_vehicles, self.mcfg, spawn_rng)
        self.states = list(states)
        self.index = {v.id: i for i, v in enumerate(self.states)}
        self.schedule = generate_traffic(s, traffic_rng)
        self.tables = {v.id: NeighborTable(v.id) for v in self.states}
        self.scheduler = BeaconScheduler(self.bcfg)
        self.held: dict[NodeId, list[Packet]] = {v.id: [] for v in self.states}
        self.packets: list[Packet] = []
        self.events = _EventLog() if event_log else None
        self.trace = [] if trace else None
        self.check_invariants = check_invariants
        self.max_transfer = 0.0
        self._route = self._router()

    # -- protocol dispatch ------------------------------------------------
    def _router(self):
        s = self.s
        R = s.radio_range
        if s.protocol == "ebgr":
            f, sc, rb = s.ebgr.factors(), s.ebgr.stability(R), s.ebgr.rings(R)
            prio = s.ebgr.ring_priority
            return lambda cur, tbl, dpos, dst, ex: ebgr.select_next_hop(
                cur, tbl, dpos, f, sc, rb, dest=dst, ring_priority=prio, exclude=ex)
        if s.protocol == "greedy":
            return lambda cur, tbl, dpos, dst, ex: baselines.greedy_next_hop(
                cur, tbl, dpos, R, exclude=ex)
        cfg = s.pdgr.config()
        return lambda cur, tbl, dpos, dst, ex: baselines.pdgr_next_hop(
            cur, tbl, dpos, cfg, R, exclude=ex)

    def _excluded(self, p: Packet) -> frozenset:
        guard = self.s.loop_guard
        if guard == "none" or not p.path:
            return frozenset()
        if guard == "previous":
            return frozenset(p.path[-1:])
        return frozenset(p.path)

    def state_of(self, node: NodeId):
        return self.states[self.index[node]]

    # -- main loop --------------------------------------------------------
    def run(self) -> RunMetrics:
        s = self.s
        cursor = 0
        for k in range(n_ticks(s)):
            now = k * s.tick
            if k > 0:
                if self.trajectory is not None:
                    self.states = self.trajectory[k]
                else:
                    self.states = step(self.states, self.net, self.mcfg, self.mob_rng)
            if self.trace is not None:
                self.trace.append((now, self.states))
            self._beacons(now)
            for tbl in self.tables.values():
                purge_stale(tbl, now, self.bcfg)
            while cursor < len(self.schedule) and self.schedule[cursor][0] <= now + 1e-9:
                _, src, dst = self.schedule[cursor]
                self._inject(src, dst, now)
                cursor += 1
            self._expire(now)
            self._route_all(now)
            if self.check_invariants:
                self._check_conservation()
        return self._metrics()

    def _beacons(self, now: float):
        beacons = emit_beacons(self.states, now, self.scheduler)
        if not beacons:
            return
        xy = np.array([v.pos for v in self.states])
        R = self.s.radio_range
        ids = [v.id for v in self.states]
        for b in beacons:
            d = np.hypot(xy[:, 0] - b.pos[0], xy[:, 1] - b.pos[1])
            for j in np.flatnonzero(d <= R):
                deliver_beacon(self.tables[ids[j]], b, now)

    def _inject(self, src: NodeId, dst: NodeId, now: float):
        pkt = Packet(len(self.packets), src, dst, now, src)
        self.packets.append(pkt)
        if self.events is not None:
            self.events.add(pkt, "created", now, src)
        self._receive(src, pkt, now)

    def _receive(self, node: NodeId, pkt: Packet, now: float):
        buf = self.held[node]
        buf.append(pkt)
        if len(buf) > self.s.buffer_capacity:
            oldest = min(buf, key=lambda p: (p.created, p.id))
            buf.remove(oldest)
            self._finish(oldest, PacketState.DROPPED_BUFFER, now, node)

    def _finish(self, pkt: Packet, state: PacketState, now: float, node: NodeId):
        pkt.state = state
        pkt.finished = now
        if self.events is not None:
            self.events.add(pkt, state.value, now, node)

    def _expire(self, now: float):
        ttl = self.s.ttl
        for node, buf in self.held.items():
            keep = []
            for p in buf:
                if now - p.created > ttl + 1e-9:
                    self._finish(p, PacketState.DROPPED_TTL, now, node)
                else:
                    keep.append(p)
            if len(keep) != len(buf):
                self.held[node] = keep

    def _due(self, p: Packet, tbl: NeighborTable, now: float) -> bool:
        if p.state is PacketState.IN_FLIGHT:
            return True
        return tbl.version != p.seen_version or now - p.last_try >= self.bcfg.mu - 1e-9

    def _route_all(self, now: float):
        R = self.s.radio_range
        work = []
        for node in sorted(self.held):
            buf = self.held[node]
            if not buf:
                continue
            tbl = self.tables[node]
            due = [p for p in buf if self._due(p, tbl, now)]
            if due:
                work.append((node, due))

        for node, due in work:
            tbl = self.tables[node]
            cur = self.state_of(node)
            decisions: dict[tuple, object] = {}
            for p in due:
                if p.state.terminal or p.carrier != node:
                    continue
                ex = self._excluded(p)
                dec = decisions.get((p.dst, ex))
                if dec is None:
                    dec = decisions[(p.dst, ex)] = self._decide(cur, tbl, p.dst, ex)
                if isinstance(dec, Forward) and in_range(cur.pos, self.state_of(dec.next_hop).pos, R):
                    self._transfer(p, node, dec.next_hop, now)
                else:
                    p.state = PacketState.BUFFERED
                    p.path.clear()
                    p.seen_version = tbl.version
                    p.last_try = now
                    if self.events is not None:
                        self.events.add(p, "carry", now, node)

    def _decide(self, cur, tbl: NeighborTable, dst: NodeId, exclude=frozenset()):
        dst_state = self.state_of(dst)
        # last hop: a destination heard via beacon and still in range
        if dst in tbl and in_range(cur.pos, dst_state.pos, self.s.radio_range):
            return Forward(dst)
        if distance(cur.pos, dst_state.pos) == 0.0:
            return CARRY
        return self._route(cur, tbl, dst_state.pos, dst, exclude)

    def _transfer(self, p: Packet, src: NodeId, dst: NodeId, now: float):
        d = distance(self.state_of(src).pos, self.state_of(dst).pos)
        self.max_transfer = max(self.max_transfer, d)
        self.held[src].remove(p)
        p.path.append(src)
        p.hops += 1
        p.carrier = dst
        if self.events is not None:
            self.events.add(p, "forward", now, dst)
        if dst == p.dst:
            self._finish(p, PacketState.DELIVERED, now, dst)
            return
        p.state = PacketState.IN_FLIGHT
        self._receive(dst, p, now)

    def _check_conservation(self):
        live = sum(len(b) for b in self.held.values())
        terminal = sum(p.state.terminal for p in self.packets)
        assert live + terminal == len(self.packets), "packet conservation violated"
        for node, buf in self.held.items():
            for p in buf:
                assert p.carrier == node and not p.state.terminal

    def _metrics(self) -> RunMetrics:
        delivered = [p for p in self.packets if p.state is PacketState.DELIVERED]
        ttl = sum(p.state is PacketState.DROPPED_TTL for p in self.packets)
        buf = sum(p.state is PacketState.DROPPED_BUFFER for p in self.packets)
        residual = sum(not p.state.terminal for p in self.packets)
        sent = len(self.packets)
        m = RunMetrics(sent=sent, delivered=len(delivered), dropped=ttl + buf,
                       residual_buffered=residual, pdr=0.0,
                       mean_hops=(sum(p.hops for p in delivered) / len(delivered)) if delivered else 0.0,
                       dropped_ttl=ttl, dropped_buffer=buf, packets=self.packets)
        if sent:
            m.pdr = compute_pdr(m)
        return m


def run(s: Scenario, **kwargs) -> RunMetrics:
    """Run one scenario to completion and return its metrics."""
    return Simulation(s, **kwargs).run()
