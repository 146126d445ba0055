"""Four-thruster horizontal bank: mixing, allocation, actuation and faults.

Thrusters are numbered 1..4 in every public field (fault events, identified
indices); arrays are indexed 0..3.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .linalg import pinv

N_THRUSTERS = 4


class AllocationError(RuntimeError):
    """Too few working thrusters to allocate a 3-DOF wrench."""


class ScheduleError(ValueError):
    pass


@dataclass(frozen=True)
class ThrusterGeometry:
    alpha: float = math.pi / 4  # rad
    lever: float = 0.1888  # m

    def __post_init__(self):
        if abs(math.cos(self.alpha)) < 1e-9:
            raise ValueError("thruster orientation must have cos(alpha) != 0")

    @property
    def a(self) -> float:
        """Lever arm over cos(alpha); the yaw scale of the fault signature."""
        return self.lever / math.cos(self.alpha)


def build_tconf(geom: ThrusterGeometry) -> np.ndarray:
    c, s, l = math.cos(geom.alpha), math.sin(geom.alpha), geom.lever
    return np.array([
        [c, c, -c, -c],
        [-s, s, -s, s],
        [-l, l, l, -l],
    ])


@functools.lru_cache(maxsize=32)
def _layout(geom: ThrusterGeometry):
    """Read-only mixing matrix and its pseudo-inverse for one geometry."""
    t = build_tconf(geom)
    t_pinv = pinv(t)
    t.setflags(write=False)
    t_pinv.setflags(write=False)
    return t, t_pinv


@dataclass(frozen=True)
class FaultEvent:
    time: float  # s
    thruster: int  # 1..4
    weight: float  # new true weight in [0, 1]

    def __post_init__(self):
        if not 1 <= self.thruster <= N_THRUSTERS:
            raise ScheduleError(f"thruster index {self.thruster} outside 1..{N_THRUSTERS}")
        if not 0.0 <= self.weight <= 1.0:
            raise ScheduleError(f"fault weight {self.weight} outside [0, 1]")


def validate_schedule(events: Sequence[FaultEvent]) -> list[FaultEvent]:
    """Check ordering and that every event only reduces a weight.

    Faults are modelled purely as loss of thrust, so a weight may never
    rise back up. Events sharing one time stamp (simultaneous faults) must
    name distinct thrusters.
    """
    events = list(events)
    weights = [1.0] * N_THRUSTERS
    seen_at = {}
    last_t = -math.inf
    for k, ev in enumerate(events):
        if ev.time < last_t:
            raise ScheduleError(f"event {k}: time {ev.time} is earlier than the previous event")
        if ev.time == last_t and ev.thruster in seen_at.get(ev.time, ()):
            raise ScheduleError(f"event {k}: thruster {ev.thruster} repeated at t={ev.time}")
        if ev.weight > weights[ev.thruster - 1]:
            raise ScheduleError(
                f"event {k}: weight of thruster {ev.thruster} rises "
                f"{weights[ev.thruster - 1]} -> {ev.weight}; faults may only reduce thrust"
            )
        weights[ev.thruster - 1] = ev.weight
        seen_at.setdefault(ev.time, set()).add(ev.thruster)
        last_t = ev.time
    return events


@dataclass
class ThrusterBank:
    """Mixing matrix, thrust coefficients and true / estimated weights.

    ``w_hat[i] == 0`` marks a thruster the supervisor has declared failed;
    allocation then runs over the remaining columns only.
    """

    geometry: ThrusterGeometry = field(default_factory=ThrusterGeometry)
    gains: np.ndarray = field(default_factory=lambda: np.full(N_THRUSTERS, 40.0))
    w_true: np.ndarray = field(default_factory=lambda: np.ones(N_THRUSTERS))
    w_hat: np.ndarray = field(default_factory=lambda: np.ones(N_THRUSTERS))
    f_max: float = 40.0  # N, per thruster

    def __post_init__(self):
        self.gains = np.array(self.gains, dtype=float).reshape(N_THRUSTERS)
        self.w_true = np.array(self.w_true, dtype=float).reshape(N_THRUSTERS)
        self.w_hat = np.array(self.w_hat, dtype=float).reshape(N_THRUSTERS)
        if np.any(self.gains <= 0):
            raise ValueError("thrust coefficients must be positive")
        if np.any((self.w_true < 0) | (self.w_true > 1)):
            raise ValueError("true weights must lie in [0, 1]")
        if np.any((self.w_hat < 0) | (self.w_hat > 1)):
            raise ValueError("estimated weights must lie in [0, 1]")
        self.tconf, self._tconf_pinv = _layout(self.geometry)

    def copy(self) -> "ThrusterBank":
        return replace(self, gains=self.gains.copy(), w_true=self.w_true.copy(), w_hat=self.w_hat.copy())

    @property
    def active(self) -> np.ndarray:
        return self.w_hat > 0.0

    def allocation_matrix(self) -> np.ndarray:
        """4x3 map from designed wrench to thruster inputs (failed rows zero)."""
        active = np.flatnonzero(self.active)
        if active.size < 3:
            raise AllocationError(f"only {active.size} thrusters left; need at least 3")
        if active.size == N_THRUSTERS:
            t_pinv = self._tconf_pinv
        else:
            t_pinv = np.linalg.inv(self.tconf[:, active])
        w = self.w_hat[active]
        out = np.zeros((N_THRUSTERS, 3))
        out[active] = (t_pinv / (w * self.gains[active])[:, None])
        return out

    def design_forces(self, tau_c) -> np.ndarray:
        """Per-thruster forces the allocation intends, ``K W_hat u_hat``."""
        u = self.allocation_matrix() @ np.asarray(tau_c, dtype=float)
        return self.gains * self.w_hat * u


def allocate(tau_c, bank: ThrusterBank) -> np.ndarray:
    """Thruster inputs ``u_hat = W_hat^-1 K^-1 T^+ tau_c``."""
    return bank.allocation_matrix() @ np.asarray(tau_c, dtype=float)


def thrust(u, bank: ThrusterBank, saturate: bool = True) -> np.ndarray:
    f = bank.gains * bank.w_true * np.asarray(u, dtype=float)
    if saturate:
        f = np.clip(f, -bank.f_max, bank.f_max)
    return f


def actuate(u, bank: ThrusterBank, saturate: bool = False) -> np.ndarray:
    """Body wrench actually produced, ``T K W u``."""
    return bank.tconf @ thrust(u, bank, saturate)


def apply_fault_schedule(bank: ThrusterBank, events: Sequence[FaultEvent], t: float) -> ThrusterBank:
    """Copy of ``bank`` whose true weights include every event with time <= t.

    Estimated weights are left untouched; only the supervisor updates them.
    """
    out = bank.copy()
    for ev in events:
        if ev.time <= t:
            out.w_true[ev.thruster - 1] = ev.weight
    return out
