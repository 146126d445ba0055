"""Scenario files: TOML in, validated :class:`Scenario` out.

Angles are degrees in files and radians in memory; every field name that
carries a unit says so (``psi_deg``, ``time_s``, ``f_max_N``). Missing
tables and keys fall back to the reference station-keeping study, so an
empty file is a valid scenario.

Example::

    [reference]
    x_m = 10.0
    y_m = 2.0
    psi_deg = 70.0

    [[faults]]
    time_s = 200.0
    thruster = 3
    weight = 0.7
"""

from __future__ import annotations

import math
import re
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .controller import ControllerGains
from .fdi import FdiConfig
from .plant import CURRENT_MODES, Environment, PlantParams
from .thrusters import FaultEvent, ScheduleError, ThrusterBank, ThrusterGeometry, validate_schedule


class ScenarioError(ValueError):
    """Invalid scenario; carries the offending field and, when known, the line."""

    def __init__(self, message, field_path=None, line=None, source=None):
        where = []
        if source:
            where.append(str(source))
        if line:
            where.append(f"line {line}")
        if field_path:
            where.append(field_path)
        prefix = ":".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)
        self.field = field_path
        self.line = line


def _default_cap():
    # just below sqrt(2 m eps / (kappa dt)) for the default surge/sway mass: beyond
    # it the sampled compensation loop turns unstable and chatters
    return np.array([38.0, 38.0, 1.0])


@dataclass
class ControllerOptions:
    d_hat_cap: np.ndarray = field(default_factory=_default_cap)
    freeze_during_fault: bool = False
    alpha_dot: str = "analytic"  # or "filtered"
    alpha_filter_s: float = 0.1


@dataclass
class Scenario:
    name: str = "scenario"
    eta_d: np.ndarray = field(default_factory=lambda: np.array([10.0, 2.0, math.radians(70.0)]))
    eta0: np.ndarray = field(default_factory=lambda: np.zeros(3))
    nu0: np.ndarray = field(default_factory=lambda: np.zeros(3))
    plant: PlantParams = field(default_factory=PlantParams)
    env: Environment = field(default_factory=Environment)
    bank: ThrusterBank = field(default_factory=ThrusterBank)
    gains: ControllerGains = field(default_factory=ControllerGains)
    control: ControllerOptions = field(default_factory=ControllerOptions)
    fdi: FdiConfig = field(default_factory=FdiConfig)
    fdi_enabled: bool = True
    faults: list = field(default_factory=list)
    duration: float = 200.0
    dt: float = 0.01
    out_dir: str | None = None

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.dt))

    def with_seed(self, seed: int) -> "Scenario":
        return replace(self, env=replace(self.env, seed=int(seed)))


# -- schema ------------------------------------------------------------------

_SCHEMA = {
    "name": str,
    "run": {"duration_s": float, "step_s": float, "out_dir": str},
    "reference": {"x_m": float, "y_m": float, "psi_deg": float},
    "initial": {"x_m": float, "y_m": float, "psi_deg": float, "u_mps": float, "v_mps": float, "r_degps": float},
    "plant": {"mass": "mat", "linear_damping": "mat", "quadratic_damping": "mat", "gravity": "vec"},
    "environment": {
        "current_speed_mps": float, "current_heading_deg": float, "current_mode": str,
        "noise_surge_N": float, "noise_sway_N": float, "noise_yaw_Nm": float, "seed": int,
    },
    "thrusters": {"alpha_deg": float, "lever_m": float, "gain_N": "vec4", "f_max_N": float},
    "controller": {
        "gamma1": "vec", "gamma2": "vec", "a1": "vec", "a2": "vec", "eps": "vec", "kappa": float,
        "d_hat_cap": "cap", "freeze_during_fault": bool, "alpha_dot": str, "alpha_filter_s": float,
    },
    "fdi": {
        "enabled": bool, "reconfigure": bool, "c1": float, "c2": float, "c3": float, "c4": float,
        "t1_s": float, "t2_s": float, "t3_s": float, "baseline_window_s": float, "baseline_lag_s": float,
        "current_window_s": float, "normalize_rmse": bool, "fail_threshold": float,
        "settle_time_s": float,
    },
    "faults": [{"time_s": float, "thruster": int, "weight": float}],
}


class _Lines:
    """Best-effort map from field path to source line for diagnostics."""

    def __init__(self, text: str):
        self.lines = text.splitlines()

    def find(self, path: str):
        table, _, key = path.rpartition(".")
        m = re.match(r"(\w+)\[(\d+)\]$", table)
        start = 0
        if m:
            count = -1
            for i, line in enumerate(self.lines):
                if line.strip() == f"[[{m.group(1)}]]":
                    count += 1
                    if count == int(m.group(2)):
                        start = i
                        break
        elif table:
            for i, line in enumerate(self.lines):
                if line.strip() == f"[{table}]":
                    start = i
                    break
        pat = re.compile(rf"^\s*{re.escape(key)}\s*=")
        for i in range(start, len(self.lines)):
            if pat.match(self.lines[i]):
                return i + 1
        return start + 1 if (m or table) else None


def _coerce(value, kind, path):
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ScenarioError(f"expected a number, got {value!r}", path)
        value = float(value)
        if not math.isfinite(value):
            raise ScenarioError("must be finite", path)
        return value
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ScenarioError(f"expected an integer, got {value!r}", path)
        return value
    if kind is bool:
        if not isinstance(value, bool):
            raise ScenarioError(f"expected true/false, got {value!r}", path)
        return value
    if kind is str:
        if not isinstance(value, str):
            raise ScenarioError(f"expected a string, got {value!r}", path)
        return value
    if kind == "cap":
        if value in ("off", "none"):
            return math.inf
        if value == "auto":
            return "auto"
        return _coerce(value, "vec", path)
    if kind in ("vec", "vec4"):
        n = 4 if kind == "vec4" else 3
        arr = np.asarray(value, dtype=object)
        if arr.ndim == 0:
            return np.full(n, _coerce(value, float, path))
        if arr.shape != (n,):
            raise ScenarioError(f"expected a scalar or {n} numbers", path)
        return np.array([_coerce(v, float, path) for v in value])
    if kind == "mat":
        arr = np.asarray(value, dtype=object)
        if arr.shape == (3,):
            return np.diag([_coerce(v, float, path) for v in value])
        if arr.shape == (3, 3):
            return np.array([[_coerce(v, float, path) for v in row] for row in value])
        raise ScenarioError("expected a 3x3 matrix or its 3-element diagonal", path)
    raise AssertionError(kind)


def _check(data: dict, schema: dict, prefix: str = ""):
    out = {}
    for key, value in data.items():
        path = f"{prefix}{key}"
        if key not in schema:
            raise ScenarioError(f"unknown field (allowed: {', '.join(sorted(schema))})", path)
        kind = schema[key]
        if isinstance(kind, dict):
            if not isinstance(value, dict):
                raise ScenarioError("expected a table", path)
            out[key] = _check(value, kind, path + ".")
        elif isinstance(kind, list):
            if not isinstance(value, list):
                raise ScenarioError("expected an array of tables", path)
            items = []
            for i, item in enumerate(value):
                if not isinstance(item, dict):
                    raise ScenarioError("expected a table", f"{path}[{i}]")
                missing = set(kind[0]) - set(item)
                if missing:
                    raise ScenarioError(f"missing field(s) {sorted(missing)}", f"{path}[{i}].{sorted(missing)[0]}")
                items.append(_check(item, kind[0], f"{path}[{i}]."))
            out[key] = items
        else:
            out[key] = _coerce(value, kind, path)
    return out


# -- construction ------------------------------------------------------------


def _build(d: dict, name: str) -> Scenario:
    sc = Scenario(name=d.get("name", name))
    run = d.get("run", {})
    sc.duration = run.get("duration_s", sc.duration)
    sc.dt = run.get("step_s", sc.dt)
    sc.out_dir = run.get("out_dir")
    if sc.dt <= 0:
        raise ScenarioError("step must be positive", "run.step_s")
    if sc.duration < 0:
        raise ScenarioError("duration must be non-negative", "run.duration_s")

    ref = d.get("reference", {})
    sc.eta_d = np.array([ref.get("x_m", 10.0), ref.get("y_m", 2.0), math.radians(ref.get("psi_deg", 70.0))])
    ini = d.get("initial", {})
    sc.eta0 = np.array([ini.get("x_m", 0.0), ini.get("y_m", 0.0), math.radians(ini.get("psi_deg", 0.0))])
    sc.nu0 = np.array([ini.get("u_mps", 0.0), ini.get("v_mps", 0.0), math.radians(ini.get("r_degps", 0.0))])

    pl = d.get("plant", {})
    base = PlantParams()
    try:
        sc.plant = PlantParams(
            mass=pl.get("mass", base.mass),
            linear_damping=pl.get("linear_damping", base.linear_damping),
            quadratic_damping=pl.get("quadratic_damping", base.quadratic_damping),
            gravity=pl.get("gravity", base.gravity),
        )
    except ValueError as exc:
        raise ScenarioError(str(exc), "plant") from None

    en = d.get("environment", {})
    mode = en.get("current_mode", "relative")
    if mode not in CURRENT_MODES:
        raise ScenarioError(f"must be one of {CURRENT_MODES}", "environment.current_mode")
    try:
        sc.env = Environment(
            current_speed=en.get("current_speed_mps", 1.0),
            current_heading=math.radians(en.get("current_heading_deg", -120.0)),
            noise_surge=en.get("noise_surge_N", 1.0),
            noise_sway=en.get("noise_sway_N", 1.0),
            noise_yaw=en.get("noise_yaw_Nm", 0.03),
            seed=en.get("seed", 0),
            current_mode=mode,
        )
    except ValueError as exc:
        raise ScenarioError(str(exc), "environment") from None

    th = d.get("thrusters", {})
    try:
        geom = ThrusterGeometry(alpha=math.radians(th.get("alpha_deg", 45.0)), lever=th.get("lever_m", 0.1888))
        sc.bank = ThrusterBank(
            geometry=geom,
            gains=th.get("gain_N", np.full(4, 40.0)),
            f_max=th.get("f_max_N", 40.0),
        )
    except ValueError as exc:
        raise ScenarioError(str(exc), "thrusters") from None
    if sc.bank.f_max <= 0:
        raise ScenarioError("must be positive", "thrusters.f_max_N")

    co = d.get("controller", {})
    kw = {k: co[k] for k in ("gamma1", "gamma2", "a1", "a2", "eps", "kappa") if k in co}
    try:
        sc.gains = ControllerGains(**kw)
    except ValueError as exc:
        raise ScenarioError(str(exc), "controller") from None
    cap = co.get("d_hat_cap", _default_cap())
    if isinstance(cap, str):  # "auto": ten times the configured disturbance bound
        cap = 10.0 * np.array([sc.env.noise_surge, sc.env.noise_sway, sc.env.noise_yaw])
    cap = np.broadcast_to(np.asarray(cap, dtype=float), (3,)).copy()
    if np.any(cap <= 0):
        raise ScenarioError("cap must be positive", "controller.d_hat_cap")
    alpha_dot = co.get("alpha_dot", "analytic")
    if alpha_dot not in ("analytic", "filtered"):
        raise ScenarioError("must be 'analytic' or 'filtered'", "controller.alpha_dot")
    sc.control = ControllerOptions(
        d_hat_cap=cap,
        freeze_during_fault=co.get("freeze_during_fault", False),
        alpha_dot=alpha_dot,
        alpha_filter_s=co.get("alpha_filter_s", 0.1),
    )
    if sc.control.alpha_filter_s <= 0:
        raise ScenarioError("must be positive", "controller.alpha_filter_s")

    fd = dict(d.get("fdi", {}))
    sc.fdi_enabled = fd.pop("enabled", True)
    rename = {"t1_s": "t1", "t2_s": "t2", "t3_s": "t3", "baseline_window_s": "baseline_window",
              "baseline_lag_s": "baseline_lag", "current_window_s": "current_window", "settle_time_s": "settle_time"}
    try:
        sc.fdi = FdiConfig(**{rename.get(k, k): v for k, v in fd.items()})
    except ValueError as exc:
        raise ScenarioError(str(exc), "fdi") from None

    events = []
    for i, f in enumerate(d.get("faults", [])):
        try:
            events.append(FaultEvent(time=f["time_s"], thruster=f["thruster"], weight=f["weight"]))
        except ScheduleError as exc:
            raise ScenarioError(str(exc), f"faults[{i}].weight" if "weight" in str(exc) else f"faults[{i}].thruster")
    try:
        sc.faults = validate_schedule(events)
    except ScheduleError as exc:
        m = re.match(r"event (\d+)", str(exc))
        idx = int(m.group(1)) if m else 0
        key = "time_s" if "time" in str(exc) and "weight" not in str(exc) else "weight"
        raise ScenarioError(str(exc), f"faults[{idx}].{key}") from None
    if sc.faults:
        last = max(ev.time for ev in sc.faults)
        if sc.duration <= last + sc.fdi.t3:
            raise ScenarioError(
                f"duration {sc.duration} s must exceed the last fault time plus T3 ({last + sc.fdi.t3} s)",
                "run.duration_s",
            )
    return sc


def scenario_from_dict(data: dict, name: str = "scenario", text: str | None = None, source=None) -> Scenario:
    lines = _Lines(text) if text is not None else None
    try:
        return _build(_check(data, _SCHEMA), name)
    except ScenarioError as exc:
        line = lines.find(exc.field) if (lines and exc.field) else None
        raise ScenarioError(str(exc).split(": ", 1)[-1] if exc.field else str(exc), exc.field, line, source) from None


def load_scenario(path) -> Scenario:
    """Parse and validate a scenario file.

    Raises
    ------
    ScenarioError
        On syntax errors, unknown or mistyped fields, schedules that raise a
        thruster weight, and out-of-range values.
    """
    path = Path(path)
    text = path.read_text()
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ScenarioError(f"syntax error: {exc}", None, int(m.group(1)) if m else None, path) from None
    return scenario_from_dict(data, name=path.stem, text=text, source=path)
