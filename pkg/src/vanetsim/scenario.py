"""Experiment configuration: the scenario dataclasses and their TOML loader.

Every field defaults to the reference setup (1000 m x 1000 m, 40 CBR senders at
2 packets/s, 250 m radio range, 0.5 s beacons, 0-25 m/s vehicles). A file only
has to name what it overrides; unknown keys are rejected.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from vanetsim.baselines import PdgrConfig
from vanetsim.ebgr import PotentialFactors, RingBounds, StabilityConfig
from vanetsim.mobility import MAX_SPEED_CAP, MobilityConfig
from vanetsim.neighbors import BeaconConfig

PROTOCOLS = ("ebgr", "greedy", "pdgr")
LOOP_GUARDS = ("none", "previous", "burst")


class ConfigError(ValueError):
    """Invalid scenario file or field value."""


@dataclass(frozen=True)
class MobilityParams:
    h_roads: int = 3
    v_roads: int = 3
    lanes_per_direction: int = 1
    lane_width: float = 3.5
    security_distance: float = 10.0
    overtaking: bool = True
    speed_min: float = 0.0
    speed_max: float = 25.0

    def config(self, tick: float) -> MobilityConfig:
        return MobilityConfig(self.security_distance, self.overtaking,
                              (self.speed_min, self.speed_max), tick)


@dataclass(frozen=True)
class BeaconParams:
    mu: float = 0.5
    alpha: int = 3

    def config(self) -> BeaconConfig:
        return BeaconConfig(self.mu, self.alpha)


@dataclass(frozen=True)
class EbgrParams:
    rho: float = 0.3
    omega: float = 0.3
    lam: float = 0.4
    sigma: float = 25.0
    # ring edges default to 100/80/60/40/20 % of the radio range
    mtr: float | None = None
    l1: float | None = None
    l2: float | None = None
    l3: float | None = None
    l4: float | None = None
    ring_priority: bool = True

    def factors(self) -> PotentialFactors:
        return PotentialFactors(self.rho, self.omega, self.lam)

    def rings(self, radio_range: float) -> RingBounds:
        given = (self.mtr, self.l1, self.l2, self.l3, self.l4)
        scale = (1.0, 0.8, 0.6, 0.4, 0.2)
        vals = [g if g is not None else radio_range * k for g, k in zip(given, scale)]
        return RingBounds(*vals)

    def stability(self, radio_range: float) -> StabilityConfig:
        return StabilityConfig(self.sigma, radio_range)


@dataclass(frozen=True)
class PdgrParams:
    prediction_horizon: float = 1.0
    w_dist: float = 0.5
    w_dir: float = 0.5

    def config(self) -> PdgrConfig:
        return PdgrConfig(self.prediction_horizon, self.w_dist, self.w_dir)


@dataclass(frozen=True)
class Scenario:
    area_width: float = 1000.0
    area_height: float = 1000.0
    n_vehicles: int = 100
    n_senders: int = 40
    radio_range: float = 250.0
    cbr_rate: float = 2.0
    packet_size: int = 512
    sim_duration: float = 120.0
    tick: float = 0.1
    ttl: float = 120.0
    buffer_capacity: int = 64
    seed: int = 1
    protocol: str = "ebgr"
    loop_guard: str = "burst"
    mobility: MobilityParams = field(default_factory=MobilityParams)
    beacon: BeaconParams = field(default_factory=BeaconParams)
    ebgr: EbgrParams = field(default_factory=EbgrParams)
    pdgr: PdgrParams = field(default_factory=PdgrParams)

    def __post_init__(self):
        validate(self)

    def with_overrides(self, **changes) -> Scenario:
        return dataclasses.replace(self, **changes)

    def with_axis(self, axis: str, value) -> Scenario:
        """Copy with one sweep axis set; sender count follows a shrinking fleet."""
        if axis == "n_vehicles":
            n = int(value)
            return self.with_overrides(n_vehicles=n, n_senders=min(self.n_senders, n))
        if axis == "radio_range":
            return self.with_overrides(radio_range=float(value))
        if axis == "max_speed":
            v = float(value)
            mob = dataclasses.replace(self.mobility, speed_max=v,
                                      speed_min=min(self.mobility.speed_min, v))
            return self.with_overrides(mobility=mob)
        raise ConfigError(f"unknown sweep axis {axis!r}")


def _check(cond: bool, name: str, msg: str):
    if not cond:
        raise ConfigError(f"{name}: {msg}")


def validate(s: Scenario) -> None:
    _check(s.area_width > 0 and s.area_height > 0, "area", "must be positive")
    _check(s.n_vehicles >= 1, "n_vehicles", "must be at least 1")
    _check(0 <= s.n_senders <= s.n_vehicles, "n_senders", "must be between 0 and n_vehicles")
    _check(s.radio_range > 0, "radio_range", "must be positive")
    _check(s.cbr_rate > 0, "cbr_rate", "must be positive")
    _check(s.packet_size > 0, "packet_size", "must be positive")
    _check(s.sim_duration >= 0, "sim_duration", "must be non-negative")
    _check(s.tick > 0, "tick", "must be positive")
    _check(s.ttl > 0, "ttl", "must be positive")
    _check(s.buffer_capacity >= 1, "buffer_capacity", "must be at least 1")
    _check(s.protocol in PROTOCOLS, "protocol", f"must be one of {', '.join(PROTOCOLS)}")
    _check(s.loop_guard in LOOP_GUARDS, "loop_guard", f"must be one of {', '.join(LOOP_GUARDS)}")
    m = s.mobility
    _check(m.speed_max <= MAX_SPEED_CAP, "mobility.speed_max", f"must not exceed {MAX_SPEED_CAP}")
    _check(s.n_senders == 0 or s.n_vehicles >= 2, "n_vehicles", "traffic needs at least two vehicles")
    # the component constructors carry the detailed invariants
    for section, build in (("mobility", lambda: m.config(s.tick)),
                           ("beacon", s.beacon.config),
                           ("ebgr", s.ebgr.factors),
                           ("ebgr", lambda: s.ebgr.rings(s.radio_range)),
                           ("ebgr", lambda: s.ebgr.stability(s.radio_range)),
                           ("pdgr", s.pdgr.config)):
        try:
            build()
        except ValueError as exc:
            raise ConfigError(f"{section}: {exc}") from None
    rb = s.ebgr.rings(s.radio_range)
    _check(rb.mtr == s.radio_range, "ebgr.mtr", "must equal radio_range")


_SECTIONS = {"mobility": MobilityParams, "beacon": BeaconParams, "ebgr": EbgrParams, "pdgr": PdgrParams}
# file key -> dataclass attribute
_ALIASES = {"ebgr": {"lambda": "lam"}}


def _build(cls, data: dict[str, Any], where: str):
    names = {f.name for f in fields(cls)} - set(_SECTIONS)
    aliases = _ALIASES.get(where, {})
    kwargs = {}
    for key, value in data.items():
        attr = aliases.get(key, key)
        if attr not in names or (where == "ebgr" and key == "lam"):
            label = f"{where}.{key}" if where else key
            raise ConfigError(f"{label}: unknown key")
        kwargs[attr] = value
    return kwargs


def scenario_from_dict(data: dict[str, Any]) -> Scenario:
    top = {k: v for k, v in data.items() if k not in _SECTIONS}
    kwargs = _build(Scenario, top, "")
    for name, cls in _SECTIONS.items():
        if name in data:
            if not isinstance(data[name], dict):
                raise ConfigError(f"{name}: must be a table")
            try:
                kwargs[name] = cls(**_build(cls, data[name], name))
            except TypeError as exc:
                raise ConfigError(f"{name}: {exc}") from None
    try:
        return Scenario(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def parse_scenario(path) -> Scenario:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from None
    return scenario_from_dict(data)


def scenario_to_dict(s: Scenario) -> dict[str, Any]:
    out = dataclasses.asdict(s)
    ebgr = out["ebgr"]
    ebgr["lambda"] = ebgr.pop("lam")
    for name in _SECTIONS:
        out[name] = {k: v for k, v in out[name].items() if v is not None}
    return out
