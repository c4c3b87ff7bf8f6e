"""Parameter sweeps over fleet size, radio range or top speed, with CSV output."""

from __future__ import annotations

import csv
import io
import logging
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from vanetsim.engine import compute_trajectory, run
from vanetsim.scenario import (PROTOCOLS, ConfigError, Scenario, scenario_from_dict, tomllib)

log = logging.getLogger(__name__)

AXES = ("n_vehicles", "radio_range", "max_speed")
RESULT_COLUMNS = ["protocol", "axis", "value", "seed", "pdr", "mean_hops", "delivered", "sent"]
SUMMARY_COLUMNS = ["value", "protocol", "mean_pdr", "stddev_pdr", "runs"]


@dataclass(frozen=True)
class Sweep:
    base: Scenario
    axis: str
    values: tuple
    seeds: tuple[int, ...]
    protocols: tuple[str, ...] = PROTOCOLS

    def __post_init__(self):
        if self.axis not in AXES:
            raise ConfigError(f"sweep.axis: must be one of {', '.join(AXES)}")
        if not self.values:
            raise ConfigError("sweep.values: must not be empty")
        if list(self.values) != sorted(self.values):
            raise ConfigError("sweep.values: must be sorted ascending")
        if len(set(self.values)) != len(self.values):
            raise ConfigError("sweep.values: duplicate values")
        if not self.seeds:
            raise ConfigError("sweep.seeds: must not be empty")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError("sweep.seeds: duplicate seeds")
        if not self.protocols or len(set(self.protocols)) != len(self.protocols):
            raise ConfigError("sweep.protocols: must be non-empty and distinct")
        for p in self.protocols:
            if p not in PROTOCOLS:
                raise ConfigError(f"sweep.protocols: unknown protocol {p!r}")
        # surface invalid axis values now rather than mid-sweep
        for v in self.values:
            self.base.with_axis(self.axis, v)

    def scenario(self, value, seed: int, protocol: str) -> Scenario:
        return self.base.with_axis(self.axis, value).with_overrides(seed=seed, protocol=protocol)


@dataclass
class SweepResult:
    rows: list[dict] = field(default_factory=list)
    failures: list[dict] = field(default_factory=list)

    def to_csv(self) -> str:
        return _csv(RESULT_COLUMNS, [[_fmt(r[c]) for c in RESULT_COLUMNS] for r in self.rows])


def _fmt(v) -> str:
    return repr(v) if isinstance(v, float) else str(v)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _run_group(sw: Sweep, value, seed: int) -> tuple[list[dict], list[dict]]:
    """All protocols for one (value, seed); they share a single mobility trajectory."""
    rows, failures = [], []
    try:
        traj = compute_trajectory(sw.scenario(value, seed, sw.protocols[0]))
    except Exception as exc:  # noqa: BLE001 - reported per run
        return [], [dict(protocol=p, value=value, seed=seed, error=repr(exc)) for p in sw.protocols]
    for protocol in sw.protocols:
        s = sw.scenario(value, seed, protocol)
        try:
            m = run(s, trajectory=traj)
        except Exception as exc:  # noqa: BLE001
            log.error("run failed: protocol=%s %s=%s seed=%s: %r", protocol, sw.axis, value, seed, exc)
            failures.append(dict(protocol=protocol, value=value, seed=seed, error=repr(exc)))
            continue
        rows.append(dict(protocol=protocol, axis=sw.axis, value=value, seed=seed, pdr=m.pdr,
                         mean_hops=m.mean_hops, delivered=m.delivered, sent=m.sent))
    return rows, failures


def run_sweep(sw: Sweep, jobs: int = 1, progress=None) -> SweepResult:
    """One run per (protocol, value, seed), rows ordered by protocol, value, seed.

    A failing run is logged and recorded in ``failures``; the rest continue.
    """
    groups = [(v, s) for v in sw.values for s in sw.seeds]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outs = list(pool.map(_run_group, [sw] * len(groups), *zip(*groups)))
    else:
        outs = []
        for v, s in groups:
            outs.append(_run_group(sw, v, s))
            if progress:
                progress(v, s)
    result = SweepResult()
    for rows, failures in outs:
        result.rows.extend(rows)
        result.failures.extend(failures)
    order = {p: i for i, p in enumerate(sw.protocols)}
    vpos = {v: i for i, v in enumerate(sw.values)}
    spos = {s: i for i, s in enumerate(sw.seeds)}
    result.rows.sort(key=lambda r: (order[r["protocol"]], vpos[r["value"]], spos[r["seed"]]))
    return result


def summarize(rows: list[dict]) -> list[dict]:
    """Mean and sample standard deviation of PDR per (value, protocol)."""
    if not rows:
        raise ValueError("no results to summarize")
    groups: dict[tuple, list[float]] = {}
    proto_order: dict[str, int] = {}
    for r in rows:
        groups.setdefault((r["value"], r["protocol"]), []).append(r["pdr"])
        proto_order.setdefault(r["protocol"], len(proto_order))
    out = []
    for (value, protocol), pdrs in sorted(groups.items(), key=lambda kv: (kv[0][0], proto_order[kv[0][1]])):
        sd = statistics.stdev(pdrs) if len(pdrs) > 1 else 0.0
        out.append(dict(value=value, protocol=protocol, mean_pdr=statistics.fmean(pdrs),
                        stddev_pdr=sd, runs=len(pdrs)))
    return out


def emit_plot_data(rows: list[dict], axis: str) -> str:
    """Long-format summary CSV (one line per axis value and protocol)."""
    summary = summarize(rows)
    header = [axis if c == "value" else c for c in SUMMARY_COLUMNS]
    return _csv(header, [[_fmt(r[c]) for c in SUMMARY_COLUMNS] for r in summary])


def sweep_from_dict(data: dict) -> Sweep:
    data = dict(data)
    spec = data.pop("sweep", None)
    if not isinstance(spec, dict):
        raise ConfigError("sweep: missing [sweep] table")
    unknown = set(spec) - {"axis", "values", "seeds", "protocols"}
    if unknown:
        raise ConfigError(f"sweep.{sorted(unknown)[0]}: unknown key")
    for key in ("axis", "values", "seeds"):
        if key not in spec:
            raise ConfigError(f"sweep.{key}: required")
    base = scenario_from_dict(data)
    return Sweep(base, spec["axis"], tuple(spec["values"]), tuple(spec["seeds"]),
                 tuple(spec.get("protocols", PROTOCOLS)))


def parse_sweep(path) -> Sweep:
    try:
        data = tomllib.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from None
    return sweep_from_dict(data)


def write_outputs(result: SweepResult, axis: str, out_dir) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"results": out / "results.csv", "summary": out / "summary.csv"}
    paths["results"].write_text(result.to_csv())
    if result.rows:
        paths["summary"].write_text(emit_plot_data(result.rows, axis))
    if result.failures:
        paths["failures"] = out / "failures.csv"
        paths["failures"].write_text(_csv(["protocol", "value", "seed", "error"],
                                          [[f["protocol"], f["value"], f["seed"], f["error"]]
                                           for f in result.failures]))
    return paths
