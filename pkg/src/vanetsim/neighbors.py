"""Periodic beaconing and per-node neighbor tables."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator

from vanetsim.core import NodeId, Position, SimTime, Velocity

# absorbs float drift when tick multiples are compared against mu
_EPS = 1e-9


@dataclass(frozen=True)
class BeaconConfig:
    mu: float = 0.5
    alpha: int = 3

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError("mu must be positive")
        if self.alpha < 1:
            raise ValueError("alpha must be at least 1")

    @property
    def timeout(self) -> float:
        return self.alpha * self.mu


@dataclass(frozen=True, slots=True)
class Beacon:
    sender: NodeId
    pos: Position
    vel: Velocity
    timestamp: SimTime


@dataclass(frozen=True, slots=True)
class NeighborEntry:
    id: NodeId
    last_pos: Position
    last_vel: Velocity
    last_heard: SimTime


@dataclass
class NeighborTable:
    """Neighbor set of one node, keyed by neighbor id.

    ``version`` increases on every insertion, update or removal so callers can
    cheaply detect that the table changed since they last looked.
    """

    owner: NodeId
    entries: dict[NodeId, NeighborEntry] = field(default_factory=dict)
    version: int = 0

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, node: object) -> bool:
        return node in self.entries

    def __iter__(self) -> Iterator[NeighborEntry]:
        return iter(self.entries.values())

    def get(self, node: NodeId) -> NeighborEntry | None:
        return self.entries.get(node)

    def ids(self) -> list[NodeId]:
        return sorted(self.entries)


class BeaconScheduler:
    """Tracks when each vehicle last beaconed."""

    def __init__(self, cfg: BeaconConfig):
        self.cfg = cfg
        self.last_emitted: dict[NodeId, SimTime] = {}

    def due(self, node: NodeId, now: SimTime) -> bool:
        last = self.last_emitted.get(node)
        return last is None or now - last >= self.cfg.mu - _EPS


def emit_beacons(states: Iterable, now: SimTime, scheduler: BeaconScheduler) -> list[Beacon]:
    """One beacon per vehicle whose previous beacon is at least ``mu`` old."""
    out = []
    for s in states:
        if scheduler.due(s.id, now):
            scheduler.last_emitted[s.id] = now
            out.append(Beacon(s.id, s.pos, s.vel, now))
    return out


def deliver_beacon(table: NeighborTable, b: Beacon, now: SimTime) -> NeighborTable:
    if b.sender == table.owner:
        return table
    table.entries[b.sender] = NeighborEntry(b.sender, b.pos, b.vel, now)
    table.version += 1
    return table


def purge_stale(table: NeighborTable, now: SimTime, cfg: BeaconConfig) -> NeighborTable:
    """Drop entries silent for more than ``alpha * mu`` seconds (boundary kept)."""
    limit = cfg.timeout + _EPS
    stale = [k for k, e in table.entries.items() if now - e.last_heard > limit]
    for k in stale:
        del table.entries[k]
    if stale:
        table.version += 1
    return table
