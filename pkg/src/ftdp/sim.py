"""Closed-loop run: plant, controller, allocation, actuation and FDI at one rate.

Per step ``k`` (time ``t = k dt``):

1. apply any fault event due at ``t`` to the true weights;
2. kernel step: pose/velocity errors and designed wrench, adaptation,
   allocation with ``W_hat``, saturated actuation with ``W``, RK4 advance
   with the pre-drawn random forcing ``d[k]``;
3. supervisor update on the residual of step ``k``, which may change
   ``W_hat`` (and so the allocation) from step ``k + 1`` on.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernel as _kernel
from .fdi import Event, FdiSupervisor
from .plant import disturbance_series
from .scenario import Scenario
from .thrusters import AllocationError

log = logging.getLogger(__name__)

COLUMNS = _kernel.COLUMNS
COL = {name: i for i, name in enumerate(COLUMNS)}
TAU_C = slice(COL["tc_x"], COL["tc_x"] + 3)


class SimulationError(RuntimeError):
    """Run aborted; ``state`` holds the last good row and events so far."""

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state or {}


@dataclass
class RunLog:
    data: np.ndarray  # (n, len(COLUMNS))
    events: list = field(default_factory=list)
    backend: str = ""
    scenario: Scenario | None = None

    columns = COLUMNS

    def __len__(self):
        return self.data.shape[0]

    def __getitem__(self, name):
        if isinstance(name, str):
            return self.data[:, COL[name]]
        return self.data[name]

    @property
    def t(self):
        return self["t"]

    def cols(self, *names):
        return self.data[:, [COL[n] for n in names]]

    def events_of(self, kind):
        return [e for e in self.events if e.kind == kind]


def make_kernel(sc: Scenario, backend=None):
    """Instantiate a kernel (``backend`` is a kernel class) for ``sc``."""
    cls = backend or _kernel.LoopKernel
    p = sc.plant
    vc = sc.env.current_nav
    k = cls(
        p.mass.ravel(), p.mass_inv.ravel(), p.linear_damping.ravel(), p.quadratic_damping.ravel(),
        p.gravity, sc.gains.gamma1, sc.gains.gamma2, sc.gains.a1, sc.gains.a2, sc.gains.eps,
        sc.gains.kappa, sc.bank.tconf.ravel(), vc[0], vc[1], sc.env.current_mode == "force",
        sc.bank.f_max, sc.dt, sc.fdi.c1,
    )
    k.set_state(sc.eta0, sc.nu0)
    k.set_reference(sc.eta_d, np.zeros(3), np.zeros(3))
    k.set_alpha_mode(sc.control.alpha_dot == "analytic", sc.control.alpha_filter_s)
    k.set_adaptation(np.zeros(3), sc.control.d_hat_cap, False)
    return k


def _push_bank(k, bank):
    k.set_allocation(bank.allocation_matrix().ravel())
    k.set_thrusters(bank.gains * bank.w_true, bank.w_true, bank.w_hat)


def _saturation_events(data, f_max, dt):
    """Onset / release of thrust saturation, per thruster."""
    out = []
    f = data[:, COL["F1"]:COL["F1"] + 4]
    sat = np.abs(f) >= f_max * (1.0 - 1e-12)
    for i in range(4):
        edges = np.flatnonzero(np.diff(sat[:, i].astype(np.int8)))
        if sat.shape[0] and sat[0, i]:
            edges = np.concatenate([[-1], edges])
        for j, e in enumerate(edges):
            on = j % 2 == 0
            out.append(Event(float(data[e + 1, 0]), "saturation-start" if on else "saturation-end",
                             {"thruster": i + 1}))
    return out


def run(sc: Scenario, *, backend=None, reference=None, seed=None) -> RunLog:
    """Simulate ``sc`` and return the per-step log plus the event stream.

    Parameters
    ----------
    backend : kernel class, optional
        Defaults to the fastest available one.
    reference : callable, optional
        ``reference(t) -> (eta_d, eta_d_dot, eta_d_ddot)`` for tracking
        runs; the scenario's constant set-point is used otherwise.
    seed : int, optional
        Overrides the scenario's random seed.
    """
    if seed is not None:
        sc = sc.with_seed(seed)
    n = sc.n_steps
    dt = sc.dt
    data = np.zeros((n, len(COLUMNS)))
    dist = np.ascontiguousarray(disturbance_series(sc.env, n))
    k_obj = make_kernel(sc, backend)
    k_obj.bind(dist, data)
    bank = sc.bank.copy()
    _push_bank(k_obj, bank)
    events: list[Event] = []
    sup = FdiSupervisor(sc.fdi, dt) if sc.fdi_enabled else None
    tau_hist = data[:, TAU_C]
    faults = sorted(sc.faults, key=lambda ev: ev.time)
    next_fault = 0
    frozen = False
    name = getattr(backend, "__module__", _kernel.BACKEND)
    for k in range(n):
        t = k * dt
        changed = False
        while next_fault < len(faults) and faults[next_fault].time <= t + 0.5 * dt:
            ev = faults[next_fault]
            bank.w_true[ev.thruster - 1] = ev.weight
            events.append(Event(t, "fault-injected", {"thruster": ev.thruster, "weight": ev.weight}))
            next_fault += 1
            changed = True
        if changed:
            _push_bank(k_obj, bank)
        if reference is not None:
            k_obj.set_reference(*reference(t))
        r = k_obj.step(k, t)
        if math.isnan(r):
            eta, nu = k_obj.get_state()
            state = {"t": t, "last_row": data[k - 1].tolist() if k else None, "eta": eta, "nu": nu,
                     "events": [e.as_record() for e in events]}
            raise SimulationError(f"run diverged at t={t:.2f} s: non-finite control output or plant state", state)
        if sup is None:
            continue
        new_w_hat = sup.update(t, k, r, tau_hist, bank)
        if sup.events:
            events.extend(sup.events)
            sup.events.clear()
        if new_w_hat is not None:
            bank.w_hat = new_w_hat
            try:
                _push_bank(k_obj, bank)
            except AllocationError as exc:
                raise SimulationError(str(exc), {"t": t, "w_hat": new_w_hat.tolist()}) from None
        if sc.control.freeze_during_fault and sup.triggered != frozen:
            frozen = sup.triggered
            k_obj.set_adaptation(k_obj.get_d_hat(), sc.control.d_hat_cap, frozen)
    events.extend(_saturation_events(data, bank.f_max, dt))
    events.sort(key=lambda e: e.t)  # stable: same-time events keep their order
    return RunLog(data, events, _kernel.BACKEND if backend is None else name, sc)
