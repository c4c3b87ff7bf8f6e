"""Comparison forwarders: greedy-only geographic routing and a PDGR-like predictor.

Neither implements perimeter/face recovery; both carry the packet when no
neighbor qualifies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from vanetsim.core import CARRY, Forward, Position, cosine_between, distance
from vanetsim.neighbors import NeighborTable


@dataclass(frozen=True)
class PdgrConfig:
    prediction_horizon: float = 1.0
    w_dist: float = 0.5
    w_dir: float = 0.5

    def __post_init__(self):
        if not self.prediction_horizon > 0:
            raise ValueError("prediction_horizon must be positive")
        if self.w_dist < 0 or self.w_dir < 0:
            raise ValueError("weights must be non-negative")
        if abs(self.w_dist + self.w_dir - 1.0) > 1e-12:
            raise ValueError("w_dist + w_dir must equal 1")


def greedy_next_hop(current, table: NeighborTable, dest_pos: Position,
                    radio_range: float = 250.0, exclude=()):
    """Forward to the neighbor closest to the destination if it makes progress."""
    cx, cy = current.pos
    dx, dy = dest_pos
    d_c = math.hypot(cx - dx, cy - dy)
    best_id, best_d = None, math.inf
    for node, entry in table.entries.items():
        if node in exclude:
            continue
        px, py = entry.last_pos
        if math.hypot(px - cx, py - cy) >= radio_range:
            continue
        d = math.hypot(px - dx, py - dy)
        if d < best_d or (d == best_d and node < best_id):
            best_id, best_d = node, d
    if best_id is not None and best_d < d_c:
        return Forward(best_id)
    return CARRY


def pdgr_score(current_pos: Position, entry, dest_pos: Position, cfg: PdgrConfig) -> float:
    """w_dist * predicted progress + w_dir * heading cosine for one neighbor."""
    dx, dy = dest_pos
    d_c = math.hypot(current_pos[0] - dx, current_pos[1] - dy)
    px, py = entry.last_pos
    vx, vy = entry.last_vel
    h = cfg.prediction_horizon
    progress = 1.0 - math.hypot(px + vx * h - dx, py + vy * h - dy) / d_c
    heading = cosine_between((vx, vy), (dx - px, dy - py))
    return cfg.w_dist * progress + cfg.w_dir * heading


def pdgr_next_hop(current, table: NeighborTable, dest_pos: Position,
                  cfg: PdgrConfig = PdgrConfig(), radio_range: float = 250.0, exclude=()):
    """One-hop predictive directional greedy choice.

    Each neighbor is scored on where it will be after ``prediction_horizon``
    seconds and on whether it is heading toward the destination. Equal scores
    go to the lowest node id.
    """
    cx, cy = current.pos
    if distance(current.pos, dest_pos) == 0.0:
        return CARRY
    best_id, best = None, -math.inf
    for node, entry in table.entries.items():
        if node in exclude:
            continue
        px, py = entry.last_pos
        if math.hypot(px - cx, py - cy) >= radio_range:
            continue
        sc = pdgr_score(current.pos, entry, dest_pos, cfg)
        if sc > best or (sc == best and node < best_id):
            best_id, best = node, sc
    if best_id is not None and best > 0.0:
        return Forward(best_id)
    return CARRY
