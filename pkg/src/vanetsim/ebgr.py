"""Edge-node based greedy routing (EBGR).

Next-hop choice scores every neighbor with a weighted sum of progress toward
the destination, heading alignment and predicted link stability, then picks
the best-scoring node in the outermost occupied distance ring.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from vanetsim.core import CARRY, Forward, Position, Velocity, cosine_between, distance
from vanetsim.neighbors import NeighborTable

INFINITE = math.inf


@dataclass(frozen=True)
class RingBounds:
    mtr: float = 250.0
    l1: float = 200.0
    l2: float = 150.0
    l3: float = 100.0
    l4: float = 50.0

    def __post_init__(self):
        if not (self.mtr > self.l1 > self.l2 > self.l3 > self.l4 > 0):
            raise ValueError("ring bounds must satisfy mtr > l1 > l2 > l3 > l4 > 0")

    @property
    def lower_edges(self) -> tuple[float, ...]:
        """Inclusive lower edge of rings 1..5."""
        return (self.l1, self.l2, self.l3, self.l4, 0.0)


@dataclass(frozen=True)
class PotentialFactors:
    rho: float = 0.3
    omega: float = 0.3
    lam: float = 0.4

    def __post_init__(self):
        for name in ("rho", "omega", "lam"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{_public(name)} must be positive")
        if not self.lam > self.rho:
            raise ValueError("lambda must exceed rho")
        if not self.lam > self.omega:
            raise ValueError("lambda must exceed omega")
        total = self.rho + self.omega + self.lam
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"rho + omega + lambda must equal 1 (got {total!r})")


def _public(name: str) -> str:
    return "lambda" if name == "lam" else name


@dataclass(frozen=True)
class StabilityConfig:
    sigma: float = 25.0
    radio_range: float = 250.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if not self.radio_range > 0:
            raise ValueError("radio_range must be positive")


def closeness(d_i: float, d_c: float) -> float:
    if d_c <= 0:
        raise ValueError("current node is at the destination; deliver instead of scoring")
    return 1.0 - d_i / d_c


def direction_alignment(v_i: Velocity, loc_i: Position, loc_d: Position) -> float:
    return cosine_between(v_i, (loc_d[0] - loc_i[0], loc_d[1] - loc_i[1]))


def link_lifetime(pos_i: Position, vel_i: Velocity, pos_j: Position, vel_j: Velocity,
                  R: float) -> float:
    """Seconds until two constant-velocity nodes drift beyond range ``R``.

    Solves |dp + dv*t|^2 = R^2 for the exit root. Returns ``math.inf`` when the
    relative velocity is zero.
    """
    dx = pos_i[0] - pos_j[0]
    dy = pos_i[1] - pos_j[1]
    dvx = vel_i[0] - vel_j[0]
    dvy = vel_i[1] - vel_j[1]
    a = dvx * dvx + dvy * dvy
    b = 2.0 * (dx * dvx + dy * dvy)
    c = dx * dx + dy * dy
    r2 = R * R
    if c > r2 * (1 + 1e-12):
        raise ValueError(f"nodes are {math.sqrt(c)!r} m apart, beyond range {R!r}")
    c0 = min(c - r2, 0.0)
    if a == 0.0:
        return INFINITE
    disc = b * b - 4.0 * a * c0
    assert disc >= 0.0, "in-range pair must have a real exit time"
    s = math.sqrt(disc)
    # pick the non-negative root without cancellation
    if b >= 0.0:
        denom = b + s
        return 0.0 if denom == 0.0 else -2.0 * c0 / denom
    return (s - b) / (2.0 * a)


def link_stability(lifetime: float, sigma: float) -> float:
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    if lifetime >= sigma:
        return 1.0
    return max(0.0, lifetime / sigma)


def potential_score(dc: float, dmi: float, ls: float, f: PotentialFactors) -> float:
    return f.rho * dc + f.omega * dmi + f.lam * ls


def classify_ring(d_ci: float, rb: RingBounds = RingBounds()) -> int | None:
    """Ring index 1 (outermost) .. 5 (innermost), or None at or beyond MTR.

    Rings are half-open ``[lower, upper)`` so every in-range distance lands in
    exactly one ring.
    """
    if d_ci < 0:
        raise ValueError("distance must be non-negative")
    if d_ci >= rb.mtr:
        return None
    if d_ci >= rb.l1:
        return 1
    if d_ci >= rb.l2:
        return 2
    if d_ci >= rb.l3:
        return 3
    if d_ci >= rb.l4:
        return 4
    return 5


def score_neighbor(cur_pos: Position, cur_vel: Velocity, d_c: float, entry, dest_pos: Position,
                   f: PotentialFactors, sc: StabilityConfig) -> float:
    d_i = distance(entry.last_pos, dest_pos)
    dc = closeness(d_i, d_c)
    dmi = direction_alignment(entry.last_vel, entry.last_pos, dest_pos)
    life = link_lifetime(cur_pos, cur_vel, entry.last_pos, entry.last_vel, sc.radio_range)
    return potential_score(dc, dmi, link_stability(life, sc.sigma), f)


def carry_threshold(cur_pos: Position, cur_vel: Velocity, dest_pos: Position,
                    f: PotentialFactors) -> float:
    """Score a neighbor has to beat: the carrier's own weighted heading term."""
    return f.omega * direction_alignment(cur_vel, cur_pos, dest_pos)


def select_next_hop(current, table: NeighborTable, dest_pos: Position,
                    f: PotentialFactors = PotentialFactors(),
                    sc: StabilityConfig = StabilityConfig(),
                    rb: RingBounds = RingBounds(), *, dest=None,
                    ring_priority: bool = True, exclude=()):
    """EBGR next hop for a packet held by ``current`` and bound for ``dest_pos``.

    Rings are scanned outermost first; the first ring whose best-scoring member
    beats the carry threshold wins. With ``ring_priority=False`` the best score
    over all rings is used instead. Equal scores go to the lowest node id.
    If ``dest`` is given and present in the table within MTR it is chosen
    directly. Nodes in ``exclude`` are never candidates.
    """
    cur_pos, cur_vel = current.pos, current.vel
    if dest is not None:
        e = table.get(dest)
        if e is not None and distance(cur_pos, e.last_pos) < rb.mtr:
            return Forward(dest)

    d_c = distance(cur_pos, dest_pos)
    if d_c == 0.0 or not len(table):
        return CARRY
    threshold = carry_threshold(cur_pos, cur_vel, dest_pos, f)

    rings: dict[int, list] = {}
    cx, cy = cur_pos
    hypot = math.hypot
    for node, entry in table.entries.items():
        if node in exclude:
            continue
        lx, ly = entry.last_pos
        ring = classify_ring(hypot(lx - cx, ly - cy), rb)
        if ring is not None:
            rings.setdefault(ring, []).append(entry)

    groups = [rings[k] for k in sorted(rings)] if ring_priority else [
        [e for k in sorted(rings) for e in rings[k]]]
    for members in groups:
        best_id, best_ps = None, -math.inf
        for entry in members:
            ps = score_neighbor(cur_pos, cur_vel, d_c, entry, dest_pos, f, sc)
            if ps > best_ps or (ps == best_ps and entry.id < best_id):
                best_id, best_ps = entry.id, ps
        if best_ps > threshold:
            return Forward(best_id)
    return CARRY
