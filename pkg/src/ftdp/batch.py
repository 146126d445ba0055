"""Batch sweeps over fault magnitude, index, timing, heading and seed.

A sweep file names a base scenario and the axes to sweep::

    base = "station_keeping.toml"     # optional, relative to this file

    [sweep]
    thruster = [3, [1, 3]]            # an int, or a pair for a double fault
    delta_w = [0.1, 0.3]              # a loss, or a pair matching a pair of thrusters
    fault_time_s = [200.0]
    psi_deg = [90.0]
    seeds = [0, 1, 2]                 # or: seed_count = 100

Every combination becomes one run with a single fault event (two for a
pair) replacing the base schedule. Failed runs are recorded, not raised.
"""

from __future__ import annotations

import csv
import itertools
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .scenario import Scenario, ScenarioError, load_scenario, scenario_from_dict
from .sim import SimulationError, run
from .thrusters import FaultEvent

SUMMARY_FIELDS = (
    "run", "thrusters", "delta_w", "fault_time_s", "psi_deg", "seed", "detected", "detect_delay_s",
    "identified", "correct", "delta_w_est", "weight_error", "reconfigure_delay_s", "status",
)


@dataclass
class Case:
    run: int
    thrusters: tuple
    delta_w: tuple
    fault_time: float
    psi_deg: float | None
    seed: int


def _as_tuple(v):
    return tuple(v) if isinstance(v, (list, tuple)) else (v,)


def expand(sweep: dict) -> list[Case]:
    """All combinations of the sweep axes, in a fixed order."""
    known = {"thruster", "delta_w", "fault_time_s", "psi_deg", "seeds", "seed_count", "duration_s"}
    unknown = set(sweep) - known
    if unknown:
        raise ScenarioError(f"unknown sweep field(s) {sorted(unknown)}", "sweep")
    thrusters = [_as_tuple(v) for v in sweep.get("thruster", [])]
    losses = [_as_tuple(v) for v in sweep.get("delta_w", [])]
    times = sweep.get("fault_time_s", [200.0])
    headings = sweep.get("psi_deg", [None])
    if "seeds" in sweep:
        seeds = list(sweep["seeds"])
    else:
        seeds = list(range(int(sweep.get("seed_count", 1))))
    cases = []
    for th, dw, tf, psi, seed in itertools.product(thrusters, losses, times, headings, seeds):
        if len(dw) == 1 and len(th) > 1:
            dw = dw * len(th)
        if len(dw) != len(th):
            continue  # pair losses only combine with thruster pairs
        for n in th:
            if not 1 <= n <= 4:
                raise ScenarioError(f"thruster {n} outside 1..4", "sweep.thruster")
        for x in dw:
            if not 0.0 <= x <= 1.0:
                raise ScenarioError(f"loss {x} outside [0, 1]", "sweep.delta_w")
        cases.append(Case(len(cases), th, dw, float(tf), psi, int(seed)))
    return cases


def make_case_scenario(base: Scenario, case: Case, duration: float | None = None) -> Scenario:
    eta_d = base.eta_d.copy()
    if case.psi_deg is not None:
        eta_d[2] = math.radians(case.psi_deg)
    faults = [FaultEvent(case.fault_time, n, 1.0 - dw) for n, dw in zip(case.thrusters, case.delta_w)]
    if duration is None:
        duration = max(base.duration, case.fault_time + base.fdi.t3 + 5.0)
    sc = replace(base, eta_d=eta_d, faults=faults, duration=duration)
    return sc.with_seed(case.seed)


def outcome(sc: Scenario, log, case: Case) -> dict:
    """Summarise one run against the injected truth."""
    t_f = case.fault_time
    dt = sc.dt
    row = {
        "run": case.run, "thrusters": "+".join(map(str, case.thrusters)),
        "delta_w": "+".join(f"{x:g}" for x in case.delta_w), "fault_time_s": t_f,
        "psi_deg": "" if case.psi_deg is None else case.psi_deg, "seed": case.seed,
        "detected": False, "detect_delay_s": "", "identified": "", "correct": False,
        "delta_w_est": "", "weight_error": "", "reconfigure_delay_s": "", "status": "ok",
    }
    det = [e for e in log.events if e.kind == "detected" and e.t >= t_f - 0.5 * dt]
    if det:
        row["detected"] = True
        row["detect_delay_s"] = round(det[0].t - t_f, 6)
        after = [e for e in log.events if e.t >= det[0].t]
        ident = next((e for e in after if e.kind.startswith("identified") or e.kind == "inconclusive"), None)
        if ident is not None and ident.kind != "inconclusive":
            found = tuple(ident.data["thrusters"])
            row["identified"] = "+".join(map(str, found))
            row["delta_w_est"] = "+".join(f"{x:.4f}" for x in ident.data["delta_w"])
            row["correct"] = sorted(found) == sorted(case.thrusters)
        elif ident is not None:
            row["identified"] = "inconclusive"
        rec = next((e for e in after if e.kind == "reconfigured"), None)
        if rec is not None:
            row["reconfigure_delay_s"] = round(rec.t - t_f, 6)
    if len(log):
        w_true = log.cols("W1", "W2", "W3", "W4")[-1]
        w_hat = log.cols("What1", "What2", "What3", "What4")[-1]
        row["weight_error"] = round(float(np.abs(w_true - w_hat).max()), 6)
    return row


def run_case(args) -> dict:
    base, case, duration = args
    sc = make_case_scenario(base, case, duration)
    try:
        log = run(sc)
    except (SimulationError, ScenarioError, ValueError) as exc:
        row = outcome(sc, _EmptyLog(), case)
        row["status"] = f"error: {exc}"
        return row
    return outcome(sc, log, case)


class _EmptyLog:
    events = ()

    def __len__(self):
        return 0

    def cols(self, *names):
        return np.zeros((0, len(names)))


def aggregate(rows: list[dict]) -> list[dict]:
    """Detection and correct-identification rates per (thrusters, loss, heading)."""
    groups: dict = {}
    for r in rows:
        key = (r["thrusters"], r["delta_w"], r["psi_deg"])
        groups.setdefault(key, []).append(r)
    out = []
    for (th, dw, psi), rs in groups.items():
        ok = [r for r in rs if r["status"] == "ok"]
        n = len(ok)
        out.append({
            "thrusters": th, "delta_w": dw, "psi_deg": psi, "runs": len(rs), "errors": len(rs) - n,
            "detection_rate": sum(r["detected"] for r in ok) / n if n else math.nan,
            "identification_rate": sum(r["correct"] for r in ok) / n if n else math.nan,
        })
    return out


def load_sweep(path):
    path = Path(path)
    try:
        data = tomllib.loads(path.read_text())
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError(f"syntax error: {exc}", source=path) from None
    unknown = set(data) - {"base", "sweep", "scenario"}
    if unknown:
        raise ScenarioError(f"unknown top-level field(s) {sorted(unknown)}", source=path)
    if "base" in data:
        base = load_scenario(path.parent / data["base"])
    else:
        base = scenario_from_dict(data.get("scenario", {}), name=path.stem)
    return base, data.get("sweep", {})


def batch(base: Scenario, sweep: dict, jobs: int = 1) -> tuple[list[dict], list[dict]]:
    """Run every case of ``sweep``; returns (rows, aggregate rows)."""
    cases = expand(sweep)
    duration = sweep.get("duration_s")
    work = [(base, c, duration) for c in cases]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(run_case, work))
    else:
        rows = [run_case(w) for w in work]
    return rows, aggregate(rows)


def write_summary(rows, path) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=SUMMARY_FIELDS)
        w.writeheader()
        w.writerows(rows)
    return path


def format_table(rows, fields=SUMMARY_FIELDS) -> str:
    fields = list(fields)
    cells = [[str(r.get(f, "")) for f in fields] for r in rows]
    widths = [max([len(f)] + [len(c[i]) for c in cells]) for i, f in enumerate(fields)]
    lines = ["  ".join(f.ljust(w) for f, w in zip(fields, widths))]
    lines += ["  ".join(c.ljust(w) for c, w in zip(row, widths)) for row in cells]
    return "\n".join(lines)
