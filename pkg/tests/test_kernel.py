import math

import numpy as np
import pytest

from ftdp import kernel
from ftdp.controller import ControllerState, Reference, adapt, control_law, tracking_errors
from ftdp.fdi import residual
from ftdp.plant import Environment, PlantState, step
from ftdp.scenario import Scenario
from ftdp.sim import COL, make_kernel, run
from ftdp.thrusters import FaultEvent, allocate, thrust

BACKENDS = [kernel.PyLoopKernel] + ([kernel.CyLoopKernel] if kernel.CyLoopKernel else [])


def _scenario(**kw):
    sc = Scenario(duration=5.0, **kw)
    return sc


def _reference_run(sc, n):
    """The same loop assembled from the numpy building blocks."""
    rows = []
    s = PlantState(sc.eta0.copy(), sc.nu0.copy())
    cs = ControllerState(cap=sc.control.d_hat_cap)
    ref = Reference(sc.eta_d)
    bank = sc.bank.copy()
    from ftdp.plant import disturbance_series
    d = disturbance_series(sc.env, n)
    for k in range(n):
        e_eta, _, e_nu = tracking_errors(ref, s.eta, s.nu, sc.gains)
        tau_c = control_law(ref, s.eta, s.nu, cs, sc.plant, sc.gains)
        r = residual(e_eta, sc.fdi.c1)
        cs = adapt(cs, e_nu, sc.gains, sc.dt)
        f = thrust(allocate(tau_c, bank), bank)
        tau = bank.tconf @ f
        rows.append(np.concatenate([[k * sc.dt], s.eta, s.nu, e_eta, e_nu, [r], tau_c, tau]))
        s = step(s, tau, sc.dt, sc.env, sc.plant, d=d[k])
    return np.array(rows)


@pytest.mark.parametrize("backend", BACKENDS, ids=lambda b: b.__module__)
@pytest.mark.parametrize("mode", ["relative", "force"])
def test_kernel_matches_numpy_reference(backend, mode):
    sc = _scenario(env=Environment(current_mode=mode, seed=4))
    n = 300
    ref = _reference_run(sc, n)
    log = run(sc, backend=backend)
    got = log.data[:n, :COL["tau_n"] + 1]
    assert np.abs(got - ref).max() < 1e-9 * max(1.0, np.abs(ref).max())


@pytest.mark.skipif(kernel.CyLoopKernel is None, reason="compiled kernel not built")
@pytest.mark.parametrize("alpha_dot", ["analytic", "filtered"])
def test_backends_agree_over_fault_run(alpha_dot):
    from dataclasses import replace
    sc = Scenario(duration=60.0, faults=[FaultEvent(10.0, 3, 0.5)])
    sc = replace(sc, control=replace(sc.control, alpha_dot=alpha_dot))
    a = run(sc, backend=kernel.PyLoopKernel)
    b = run(sc, backend=kernel.CyLoopKernel)
    assert np.abs(a.data - b.data).max() < 1e-9
    assert [e.kind for e in a.events] == [e.kind for e in b.events]


@pytest.mark.parametrize("backend", BACKENDS, ids=lambda b: b.__module__)
def test_kernel_api(backend):
    sc = _scenario()
    k = make_kernel(sc, backend)
    k.set_state([1.0, 2.0, 0.3], [0.1, 0.0, 0.0])
    eta, nu = k.get_state()
    assert list(eta) == [1.0, 2.0, 0.3] and list(nu) == [0.1, 0.0, 0.0]
    k.set_adaptation([0.5, 0.5, 0.1], [1.0, 1.0, 1.0], True)
    assert list(k.get_d_hat()) == [0.5, 0.5, 0.1]
    with pytest.raises(ValueError):
        k.set_alpha_mode(False, 0.0)


@pytest.mark.parametrize("backend", BACKENDS, ids=lambda b: b.__module__)
def test_kernel_reports_blowup(backend):
    sc = _scenario()
    k = make_kernel(sc, backend)
    k.set_state([0.0, 0.0, 0.0], [1e200, 0.0, 0.0])
    d = np.zeros((1, 3))
    log = np.zeros((1, kernel.NCOLS))
    k.bind(d, log)
    from ftdp.sim import _push_bank
    _push_bank(k, sc.bank)
    assert math.isnan(k.step(0, 0.0))


def test_columns():
    assert len(kernel.COLUMNS) == kernel.NCOLS
    assert kernel.BACKEND in ("cython", "python")


def test_pure_python_fallback_selected_by_environment():
    import os
    import subprocess
    import sys
    env = dict(os.environ, FTDP_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import ftdp; print(ftdp.BACKEND)"],
                         capture_output=True, text=True, env=env, check=True)
    assert out.stdout.strip() == "python"


def test_benchmark_script_runs():
    import runpy
    from pathlib import Path
    bench = runpy.run_path(str(Path(__file__).parent.parent / "benchmarks" / "bench_kernels.py"))
    assert bench["main"](["--duration", "2", "--repeat", "1"]) == 0
