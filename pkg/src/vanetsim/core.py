"""Planar geometry and identity types shared by every module."""

from __future__ import annotations

import math
from typing import NamedTuple, Union

NodeId = int
SimTime = float


class Position(NamedTuple):
    x: float
    y: float

    def __sub__(self, other: Position) -> Velocity:  # type: ignore[override]
        return Velocity(self.x - other.x, self.y - other.y)

    def moved(self, vel: Velocity, dt: float) -> Position:
        return Position(self.x + vel.vx * dt, self.y + vel.vy * dt)


class Velocity(NamedTuple):
    vx: float
    vy: float

    @property
    def speed(self) -> float:
        return math.hypot(self.vx, self.vy)

    def scaled(self, k: float) -> Velocity:
        return Velocity(self.vx * k, self.vy * k)


def distance(a: Position, b: Position) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def cosine_between(v, d) -> float:
    """Cosine of the angle between two plane vectors.

    A zero-length vector has no direction; it scores 0.0 (neutral) so that
    stationary vehicles neither help nor hurt a weighted score.
    """
    nv = math.hypot(v[0], v[1])
    nd = math.hypot(d[0], d[1])
    if nv == 0.0 or nd == 0.0:
        return 0.0
    # normalise first; nv * nd can underflow for tiny vectors
    c = (v[0] / nv) * (d[0] / nd) + (v[1] / nv) * (d[1] / nd)
    # rounding can push |c| a hair past 1
    return max(-1.0, min(1.0, c))


class Forward(NamedTuple):
    """Routing decision: hand the packet to ``next_hop``."""

    next_hop: NodeId


class Carry:
    """Routing decision: keep the packet and wait for better neighbors."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "CARRY"


CARRY = Carry()
RoutingDecision = Union[Forward, Carry]
