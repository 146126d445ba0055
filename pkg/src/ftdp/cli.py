"""Command line: ``ftdp run | batch | validate``.

Exit codes: 0 success, 2 usage, 3 invalid scenario or sweep, 4 simulation
aborted, 5 file-system error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from . import kernel
from .batch import batch, format_table, load_sweep, write_summary
from .output import emit_outputs
from .scenario import ScenarioError, load_scenario
from .sim import SimulationError, run

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_SIM = 4
EXIT_IO = 5


def _cmd_run(args) -> int:
    sc = load_scenario(args.scenario)
    if args.seed is not None:
        sc = sc.with_seed(args.seed)
    out = Path(args.out or sc.out_dir or "out")
    t0 = time.perf_counter()
    log = run(sc)
    wall = time.perf_counter() - t0
    files = emit_outputs(log, out, every=args.every)
    print(f"{sc.name}: {len(log)} steps, {sc.duration:g} s simulated in {wall:.2f} s ({kernel.BACKEND} kernel)")
    for ev in log.events:
        if ev.kind.startswith("saturation"):
            continue
        print(f"  t={ev.t:9.2f}  {ev.kind:18s} {json.dumps(ev.data, default=float) if ev.data else ''}")
    for kind, path in files.items():
        print(f"  {kind}: {path}")
    return EXIT_OK


def _cmd_batch(args) -> int:
    base, sweep = load_sweep(args.sweep)
    rows, agg = batch(base, sweep, jobs=args.jobs)
    out = Path(args.out) if args.out else Path(args.sweep).with_suffix(".summary.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    write_summary(rows, out)
    print(format_table(rows))
    print()
    print(format_table(agg, ("thrusters", "delta_w", "psi_deg", "runs", "errors",
                             "detection_rate", "identification_rate")) if agg else "no runs")
    print(f"summary: {out}")
    return EXIT_OK


def _cmd_validate(args) -> int:
    sc = load_scenario(args.scenario)
    faults = ", ".join(f"t={e.time:g}s T{e.thruster}->W={e.weight:g}" for e in sc.faults) or "none"
    print(f"{args.scenario}: ok ({sc.n_steps} steps of {sc.dt:g} s; faults: {faults})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ftdp", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log FDI diagnostics")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="simulate one scenario and write its outputs")
    r.add_argument("scenario")
    r.add_argument("--out", help="output directory (default: run.out_dir or ./out)")
    r.add_argument("--seed", type=int, help="override the random seed")
    r.add_argument("--every", type=int, default=1, help="write every N-th step to the CSV")
    r.set_defaults(func=_cmd_run)

    b = sub.add_parser("batch", help="run a sweep and write a summary table")
    b.add_argument("sweep")
    b.add_argument("--out", help="summary CSV path")
    b.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    b.set_defaults(func=_cmd_batch)

    v = sub.add_parser("validate", help="check a scenario file without running it")
    v.add_argument("scenario")
    v.set_defaults(func=_cmd_validate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"error: invalid scenario: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SimulationError as exc:
        print(f"error: simulation aborted: {exc}", file=sys.stderr)
        if exc.state:
            print(json.dumps(exc.state, default=float, indent=1), file=sys.stderr)
        return EXIT_SIM
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
