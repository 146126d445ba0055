"""Run artefacts: time-series CSV, event log (JSON lines) and a plot script."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .sim import COLUMNS, RunLog

CSV_FORMAT = "%.12g"


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not serialisable: {type(obj).__name__}")


def write_timeseries(log: RunLog, path, every: int = 1) -> Path:
    """One header row, then one row per step (or every ``every``-th step)."""
    if every < 1:
        raise ValueError("every must be >= 1")
    path = Path(path)
    with open(path, "w", newline="") as fh:
        fh.write(",".join(COLUMNS) + "\n")
        if len(log):
            np.savetxt(fh, log.data[::every], fmt=CSV_FORMAT, delimiter=",")
    return path


def read_timeseries(path) -> tuple[list[str], np.ndarray]:
    path = Path(path)
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        body = fh.read()
    if not body.strip():
        return header, np.zeros((0, len(header)))
    return header, np.loadtxt(body.splitlines(), delimiter=",", ndmin=2)


def write_events(log: RunLog, path) -> Path:
    path = Path(path)
    with open(path, "w") as fh:
        for ev in log.events:
            fh.write(json.dumps(ev.as_record(), default=_jsonable) + "\n")
    return path


PLOT_TEMPLATE = '''"""Figures for run {name}. Needs matplotlib: python {script}"""

import numpy as np
import matplotlib.pyplot as plt

CSV = "{csv}"
C2 = {c2!r}

with open(CSV) as fh:
    header = fh.readline().strip().split(",")
data = np.loadtxt(CSV, delimiter=",", skiprows=1, ndmin=2)
col = {{name: data[:, i] for i, name in enumerate(header)}}
t = col["t"]

fig, ax = plt.subplots(figsize=(8, 3))
ax.plot(t, col["R"], lw=0.8)
ax.axhline(C2, color="r", ls="--", lw=0.8, label="threshold")
ax.set_yscale("log")
ax.set_xlabel("t [s]")
ax.set_ylabel("residual")
ax.legend()
fig.tight_layout()
fig.savefig("{stem}_residual.png", dpi=150)

fig, axes = plt.subplots(3, 1, sharex=True, figsize=(8, 6))
for ax, a, b, lab in zip(axes, ("tc_x", "tc_y", "tc_n"), ("tau_x", "tau_y", "tau_n"), ("X [N]", "Y [N]", "N [N m]")):
    ax.plot(t, col[a], lw=0.6, label="designed")
    ax.plot(t, col[b], lw=0.6, label="applied")
    ax.set_ylabel(lab)
axes[0].legend()
axes[-1].set_xlabel("t [s]")
fig.tight_layout()
fig.savefig("{stem}_wrench.png", dpi=150)

fig, ax = plt.subplots(figsize=(5, 5))
ax.plot(col["y"], col["x"], lw=0.8)
ax.plot(col["y"][-1], col["x"][-1], "o")
ax.set_xlabel("y [m]")
ax.set_ylabel("x [m]")
ax.set_aspect("equal", adjustable="datalim")
fig.tight_layout()
fig.savefig("{stem}_trajectory.png", dpi=150)

fig, axes = plt.subplots(4, 1, sharex=True, figsize=(8, 7))
for i, ax in enumerate(axes, start=1):
    ax.plot(t, col[f"W{{i}}"], lw=1.0, label="true")
    ax.plot(t, col[f"What{{i}}"], lw=1.0, ls="--", label="estimated")
    ax.set_ylim(-0.05, 1.05)
    ax.set_ylabel(f"W{{i}}")
axes[0].legend()
axes[-1].set_xlabel("t [s]")
fig.tight_layout()
fig.savefig("{stem}_weights.png", dpi=150)
'''


def write_plot_script(csv_path, path, name: str = "run", c2: float = 0.005) -> Path:
    path = Path(path)
    path.write_text(PLOT_TEMPLATE.format(
        name=name, script=path.name, csv=Path(csv_path).name, c2=c2, stem=name,
    ))
    return path


def emit_outputs(log: RunLog, out_dir, name: str | None = None, every: int = 1) -> dict:
    """Write ``<name>.csv``, ``<name>.events.jsonl`` and ``plot_<name>.py``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    sc = log.scenario
    name = name or (sc.name if sc is not None else "run")
    c2 = sc.fdi.c2 if sc is not None else 0.005
    csv = write_timeseries(log, out / f"{name}.csv", every)
    events = write_events(log, out / f"{name}.events.jsonl")
    plot = write_plot_script(csv, out / f"plot_{name}.py", name, c2)
    return {"timeseries": csv, "events": events, "plot": plot}
