"""Fault detection, identification and reconfiguration.

Detection watches a scalar residual built from the pose error. Once it
fires, the supervisor waits for the designed wrench to settle, compares it
with the pre-fault baseline, and explains the change as thrust loss on one
or two thrusters by least-squares matching against the columns of the fault
signature matrix.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .linalg import DegenerateShapeError, pinv, rmse3
from .thrusters import N_THRUSTERS, ThrusterBank

log = logging.getLogger(__name__)

PAIRS = tuple(itertools.combinations(range(N_THRUSTERS), 2))
SMALL_COLUMN_RATIO = 0.05


class DegeneratePairError(DegenerateShapeError):
    pass


def residual(e_eta, c1: float) -> float:
    """``sqrt(x_e^2 + y_e^2 + c1 psi_e^2)``; heading error in radians."""
    if c1 <= 0:
        raise ValueError("c1 must be positive")
    return math.sqrt(e_eta[0] ** 2 + e_eta[1] ** 2 + c1 * e_eta[2] ** 2)


# -- signature ---------------------------------------------------------------


def signature_matrix(taus, a: float) -> np.ndarray:
    """Assemble the 3x4 signature from per-thruster components tau_1..tau_4.

    Valid for the symmetric 45 degree layout, where column i is the wrench a
    unit force on thruster i would produce, scaled by ``tau_i``.
    """
    t1, t2, t3, t4 = np.asarray(taus, dtype=float)
    return np.array([
        [t1, t2, t3, t4],
        [-t1, t2, t3, -t4],
        [-a * t1, a * t2, -a * t3, a * t4],
    ])


def signature_components(tau_c, a: float) -> np.ndarray:
    """tau_1..tau_4 for the 45 degree layout: ``M_c^T tau_c / 4``."""
    mc_t = np.array([
        [1.0, -1.0, -1.0 / a],
        [1.0, 1.0, 1.0 / a],
        [1.0, 1.0, -1.0 / a],
        [1.0, -1.0, 1.0 / a],
    ])
    return 0.25 * mc_t @ np.asarray(tau_c, dtype=float)


@dataclass
class FaultSignature:
    matrix: np.ndarray  # 3x4
    tau_c: np.ndarray  # wrench the signature was built from
    small_columns: tuple = ()

    @property
    def column_norms(self) -> np.ndarray:
        return np.linalg.norm(self.matrix, axis=0)


def build_signature(tau_c, bank: ThrusterBank) -> FaultSignature:
    """Signature ``T diag(K W_hat u_hat)`` of the current allocation.

    Thrust loss ``dW_i = Delta W_i / W_hat_i`` on thruster i changes the
    produced wrench by ``-dW_i`` times column i. Columns whose scale is below
    5% of the largest are flagged: a loss there barely shows in the residual.
    """
    tau_c = np.asarray(tau_c, dtype=float)
    forces = bank.design_forces(tau_c)
    m = bank.tconf * forces[None, :]
    norms = np.abs(forces)
    small = ()
    if norms.max() > 0:
        small = tuple(int(i) + 1 for i in np.flatnonzero(bank.active & (norms < SMALL_COLUMN_RATIO * norms.max())))
        if small:
            log.debug("fault signature has near-zero columns for thrusters %s", small)
    return FaultSignature(m, tau_c.copy(), small)


def deviation(tau_c_now, tau_c_before) -> np.ndarray:
    return np.asarray(tau_c_now, dtype=float) - np.asarray(tau_c_before, dtype=float)


# -- identification ----------------------------------------------------------


@dataclass
class SingleFit:
    delta_w: float
    rmse: float
    thruster: int  # 1..4, 0 if no admissible candidate
    table: list = field(default_factory=list)  # (thruster, delta_w, rmse) per column


@dataclass
class DoubleFit:
    delta_w: tuple
    rmse: float
    thrusters: tuple  # (j, k), 1-based, (0, 0) if none admissible
    table: list = field(default_factory=list)
    degenerate: tuple = ()


def _admissible(dw) -> bool:
    return bool(np.all((dw > 0.0) & (dw <= 1.0)))


def identify_single(sig: FaultSignature | np.ndarray, b_tau) -> SingleFit:
    """Best single-thruster explanation of the wrench deviation.

    Each column is fitted by least squares; a candidate counts only if its
    loss lies in (0, 1], i.e. the column points the same way as ``b_tau``.
    Ties go to the lowest thruster number.
    """
    m = sig.matrix if isinstance(sig, FaultSignature) else np.asarray(sig, dtype=float)
    b = np.asarray(b_tau, dtype=float)
    best = SingleFit(0.0, math.inf, 0)
    for i in range(N_THRUSTERS):
        col = m[:, i]
        if not col.any():
            best.table.append((i + 1, math.nan, math.inf))
            continue
        dw = (pinv(col) @ b).item()
        err = rmse3(b - dw * col) if 0.0 < dw <= 1.0 else math.inf
        best.table.append((i + 1, dw, err))
        if err < best.rmse:
            best.delta_w, best.rmse, best.thruster = dw, err, i + 1
    return best


def solve_pair(m: np.ndarray, pair, b) -> np.ndarray:
    a = m[:, list(pair)]
    try:
        return pinv(a) @ b
    except DegenerateShapeError as exc:
        raise DegeneratePairError(exc.shape, exc.cond) from None


def identify_double(sig: FaultSignature | np.ndarray, b_tau) -> DoubleFit:
    """Best two-thruster explanation over the six column pairs.

    Near-singular pairs are skipped and reported in ``degenerate``.
    """
    m = sig.matrix if isinstance(sig, FaultSignature) else np.asarray(sig, dtype=float)
    b = np.asarray(b_tau, dtype=float)
    best = DoubleFit((0.0, 0.0), math.inf, (0, 0))
    degenerate = []
    for pair in PAIRS:
        label = (pair[0] + 1, pair[1] + 1)
        try:
            dw = solve_pair(m, pair, b)
        except DegeneratePairError:
            degenerate.append(label)
            best.table.append((label, (math.nan, math.nan), math.inf))
            continue
        a = m[:, list(pair)]
        err = rmse3(b - a @ dw) if _admissible(dw) else math.inf
        best.table.append((label, (float(dw[0]), float(dw[1])), err))
        if err < best.rmse:
            best.delta_w, best.rmse, best.thrusters = (float(dw[0]), float(dw[1])), err, label
    best.degenerate = tuple(degenerate)
    return best


# -- supervisor --------------------------------------------------------------


@dataclass
class FdiConfig:
    c1: float = (180.0 / math.pi) ** 2
    c2: float = 0.005
    c3: float = 0.1
    c4: float = 0.1
    t1: float = 20.0
    t2: float = 25.0
    t3: float = 35.0
    baseline_window: float = 1.0  # s, mean of tau_c before detection
    baseline_lag: float = 3.0  # s, gap between baseline window and detection
    current_window: float = 0.5  # s, running mean of tau_c inside [T1, T2)
    normalize_rmse: bool = False  # compare rmse / |b_tau| instead of rmse
    reconfigure: bool = True  # apply W_hat updates at T2
    fail_threshold: float = 0.05  # W_hat at or below this marks a failed thruster
    settle_time: float = 5.0  # s the residual must stay below c2 before the first arming

    def __post_init__(self):
        if min(self.c1, self.c2, self.c3, self.c4) <= 0:
            raise ValueError("thresholds c1..c4 must be positive")
        if not 0 < self.t1 < self.t2 < self.t3:
            raise ValueError("timings must satisfy 0 < T1 < T2 < T3")
        if self.settle_time < 0:
            raise ValueError("settle time must be non-negative")
        if self.baseline_window <= 0 or self.current_window <= 0 or self.baseline_lag < 0:
            raise ValueError("averaging windows must be positive")


@dataclass
class Event:
    t: float
    kind: str
    data: dict = field(default_factory=dict)

    def as_record(self) -> dict:
        return {"t": round(self.t, 6), "event": self.kind, **self.data}


class FdiSupervisor:
    """Detection trigger plus the timed identify / reconfigure / re-arm cycle.

    Advanced once per control step by :meth:`update`. ``tau_history`` is an
    (n, 3) array of designed wrenches indexed by step, of which rows up to
    and including the current step are valid.
    """

    def __init__(self, config: FdiConfig, dt: float):
        self.config = config
        self.dt = dt
        self.events: list[Event] = []
        self.settled = config.settle_time == 0.0
        self._quiet_since = math.nan
        self.armed = self.settled  # bFirst
        self.triggered = False  # faultTrig
        self.t_c = math.nan
        self.baseline = None
        self._reset_accumulators()

    def _reset_accumulators(self):
        self.n_single = 0
        self.n_double = 0
        self.single_tally: dict[int, list] = {}
        self.double_tally: dict[tuple, list] = {}
        self.applied = False
        self.ignored = 0
        self.last_fits = None
        self._warned = False

    def _steps(self, seconds):
        return max(1, int(round(seconds / self.dt)))

    def _window_mean(self, tau_history, end, length):
        start = max(0, end - length)
        if end <= start:
            return np.asarray(tau_history[max(end, 0)], dtype=float)
        return np.asarray(tau_history[start:end], dtype=float).mean(axis=0)

    def state_snapshot(self) -> dict:
        return {
            "armed": self.armed,
            "triggered": self.triggered,
            "n_single": self.n_single,
            "n_double": self.n_double,
            "tallies": (dict(self.single_tally), dict(self.double_tally)),
        }

    def _settle(self, r, t):
        # the loop must first hold the set-point; start-up transients are not faults
        if r > self.config.c2:
            self._quiet_since = math.nan
            return
        if math.isnan(self._quiet_since):
            self._quiet_since = t
        if t - self._quiet_since >= self.config.settle_time - 0.5 * self.dt:
            self.settled = True
            self.armed = True
            self.events.append(Event(t, "armed", {}))

    def detect(self, r: float, t: float, k: int, tau_history) -> bool:
        """One-shot trigger; returns True when a new detection latches."""
        cfg = self.config
        if not self.settled:
            self._settle(r, t)
            return False
        if r <= cfg.c2:
            return False
        if not self.armed:
            if self.ignored == 0:
                self.events.append(Event(t, "ignored-exceedance", {"residual": r}))
            self.ignored += 1
            return False
        self.armed = False
        self.triggered = True
        self.t_c = t
        self._reset_accumulators()
        lag = int(round(cfg.baseline_lag / self.dt))
        self.baseline = self._window_mean(tau_history, k - lag, self._steps(cfg.baseline_window))
        self.events.append(Event(t, "detected", {"residual": r, "baseline": self.baseline.tolist()}))
        return True

    def identify(self, bank: ThrusterBank, tau_now) -> tuple[SingleFit, DoubleFit | None]:
        """One identification sample: single first, pair model if that fails."""
        cfg = self.config
        sig = build_signature(tau_now, bank)
        if sig.small_columns and not self._warned:
            log.warning("fault signature has near-zero columns for thrusters %s; "
                        "losses there are hard to see", sig.small_columns)
            self._warned = True
        b = deviation(tau_now, self.baseline)
        scale = max(float(np.linalg.norm(b)), 1e-12) if cfg.normalize_rmse else 1.0
        single = identify_single(sig, b)
        if single.thruster and single.rmse / scale <= cfg.c3:
            self.n_single += 1
            tally = self.single_tally.setdefault(single.thruster, [0.0, 0])
            tally[0] += single.delta_w
            tally[1] += 1
            return single, None
        double = identify_double(sig, b)
        if double.thrusters[0] and double.rmse / scale <= cfg.c4:
            self.n_double += 1
            tally = self.double_tally.setdefault(double.thrusters, [0.0, 0.0, 0])
            tally[0] += double.delta_w[0]
            tally[1] += double.delta_w[1]
            tally[2] += 1
        return single, double

    def decision(self):
        """Majority candidate of the averaging window, or None."""
        if self.n_single == 0 and self.n_double == 0:
            return None
        if self.n_single >= self.n_double:
            n, (total, count) = max(self.single_tally.items(), key=lambda kv: (kv[1][1], -kv[0]))
            return ((n,), (total / count,), count)
        pair, (s1, s2, count) = max(self.double_tally.items(),
                                    key=lambda kv: (kv[1][2], tuple(-i for i in kv[0])))
        return (pair, (s1 / count, s2 / count), count)

    def update(self, t: float, k: int, r: float, tau_history, bank: ThrusterBank):
        """Advance one step. Returns new estimated weights when they change."""
        cfg = self.config
        self.detect(r, t, k, tau_history)
        if not self.triggered:
            return None
        since = t - self.t_c
        # sampled clock: the equality tests of the timed cycle fire on the first step past them
        eps = 0.5 * self.dt
        new_w_hat = None
        if since > cfg.t1 + eps and since < cfg.t2 - eps and not self.applied:
            tau_now = self._window_mean(tau_history, k + 1, self._steps(cfg.current_window))
            self.last_fits = self.identify(bank, tau_now)
        elif since >= cfg.t2 - eps and not self.applied:
            self.applied = True
            new_w_hat = self._conclude(t, bank)
        if since >= cfg.t3 - eps:
            self.triggered = False
            self.armed = True
            self.events.append(Event(t, "re-armed", {"ignored_exceedances": self.ignored}))
        return new_w_hat

    def _conclude(self, t, bank: ThrusterBank):
        cfg = self.config
        dec = self.decision()
        if dec is None:
            table = {}
            if self.last_fits is not None:
                single, double = self.last_fits
                table["single"] = [list(row) for row in single.table]
                if double is not None:
                    table["double"] = [[list(p), list(dw), e] for p, dw, e in double.table]
            self.events.append(Event(t, "inconclusive", table))
            log.info("identification inconclusive at t=%.2f", t)
            return None
        thrusters, losses, count = dec
        kind = "identified-single" if len(thrusters) == 1 else "identified-double"
        self.events.append(Event(t, kind, {
            "thrusters": list(thrusters), "delta_w": [round(x, 6) for x in losses], "samples": count,
        }))
        if not cfg.reconfigure:
            return None
        w_hat = bank.w_hat.copy()
        for n, dw in zip(thrusters, losses):
            w = w_hat[n - 1] * (1.0 - dw)
            if w <= cfg.fail_threshold:
                w = 0.0
                self.events.append(Event(t, "thruster-failed", {"thruster": n}))
            w_hat[n - 1] = w
        self.events.append(Event(t, "reconfigured", {"w_hat": [round(x, 6) for x in w_hat]}))
        return w_hat
