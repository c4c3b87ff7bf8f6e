"""Deterministic VANET simulator with EBGR edge-node routing and greedy baselines."""

from vanetsim.core import Position, Velocity, cosine_between, distance

__version__ = "0.1.0"

__all__ = ["Position", "Velocity", "cosine_between", "distance", "__version__"]
