"""Command line entry point: ``vanetsim run|sweep|validate``.

Exit codes: 0 success, 1 configuration error, 2 run failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from vanetsim.engine import Simulation
from vanetsim.mobility import write_trace
from vanetsim.scenario import ConfigError, Scenario, parse_scenario, tomllib
from vanetsim.sweep import parse_sweep, run_sweep, write_outputs

EXIT_OK, EXIT_CONFIG, EXIT_RUN = 0, 1, 2

log = logging.getLogger("vanetsim")


def _load(path: str | None) -> Scenario:
    return Scenario() if path is None else parse_scenario(path)


def cmd_run(args) -> int:
    s = _load(args.config)
    if args.seed is not None:
        s = s.with_overrides(seed=args.seed)
    if args.protocol is not None:
        s = s.with_overrides(protocol=args.protocol)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    sim = Simulation(s, event_log=args.events, trace=args.trace)
    try:
        m = sim.run()
    except Exception:
        log.exception("run failed")
        return EXIT_RUN
    (out / "metrics.csv").write_text(m.to_csv(s))
    if args.trace:
        write_trace(sim.trace, out / "trajectory.csv")
    if args.events:
        sim.events.write(out / "events.csv")
    print(f"{s.protocol}: sent={m.sent} delivered={m.delivered} dropped={m.dropped} "
          f"residual={m.residual_buffered} pdr={m.pdr:.2f}% mean_hops={m.mean_hops:.2f}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    sw = parse_sweep(args.config)
    total = len(sw.values) * len(sw.seeds)
    done = [0]

    def progress(value, seed):
        done[0] += 1
        log.info("[%d/%d] %s=%s seed=%s", done[0], total, sw.axis, value, seed)

    result = run_sweep(sw, jobs=args.jobs, progress=progress)
    paths = write_outputs(result, sw.axis, args.out)
    for name, p in paths.items():
        print(f"{name}: {p}")
    if result.failures:
        log.error("%d of %d runs failed", len(result.failures),
                  len(result.failures) + len(result.rows))
        return EXIT_RUN
    return EXIT_OK


def cmd_validate(args) -> int:
    data = tomllib.loads(Path(args.config).read_text())
    if "sweep" in data:
        sw = parse_sweep(args.config)
        print(f"ok: sweep over {sw.axis} ({len(sw.values)} values x {len(sw.seeds)} seeds "
              f"x {len(sw.protocols)} protocols)")
    else:
        s = parse_scenario(args.config)
        print(f"ok: {s.protocol} scenario, {s.n_vehicles} vehicles, {s.sim_duration} s")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vanetsim", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="simulate one scenario")
    r.add_argument("config", nargs="?", help="scenario TOML (defaults when omitted)")
    r.add_argument("-o", "--out", default="out", help="output directory")
    r.add_argument("--seed", type=int)
    r.add_argument("--protocol", choices=["ebgr", "greedy", "pdgr"])
    r.add_argument("--trace", action="store_true", help="write trajectory.csv")
    r.add_argument("--events", action="store_true", help="write per-packet events.csv")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="run a parameter sweep")
    s.add_argument("config", help="sweep TOML with a [sweep] table")
    s.add_argument("-o", "--out", default="out", help="output directory")
    s.add_argument("-j", "--jobs", type=int, default=1, help="parallel worker processes")
    s.set_defaults(func=cmd_sweep)

    v = sub.add_parser("validate", help="check a scenario or sweep file")
    v.add_argument("config")
    v.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, tomllib.TOMLDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
