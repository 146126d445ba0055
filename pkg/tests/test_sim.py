import math
from dataclasses import replace

import numpy as np
import pytest

from ftdp import kernel
from ftdp.plant import Environment
from ftdp.scenario import Scenario
from ftdp.sim import COL, SimulationError, run
from ftdp.thrusters import FaultEvent


def test_log_shape_and_first_row():
    sc = Scenario(duration=2.0)
    log = run(sc)
    assert log.data.shape == (200, len(log.columns))
    assert log.t[0] == 0.0 and log.t[-1] == pytest.approx(1.99)
    assert log["x"][0] == 0.0
    assert log["R"][0] == pytest.approx(math.sqrt(104 + (180 / math.pi * math.radians(70)) ** 2))


def test_zero_duration():
    log = run(Scenario(duration=0.0))
    assert len(log) == 0 and log.events == []


def test_seed_changes_noise_only():
    a = run(Scenario(duration=5.0), seed=1)
    b = run(Scenario(duration=5.0), seed=1)
    c = run(Scenario(duration=5.0), seed=2)
    assert np.array_equal(a.data, b.data)
    assert not np.array_equal(a.data, c.data)


def test_fault_applied_at_scheduled_step():
    sc = Scenario(duration=40.0, faults=[FaultEvent(10.0, 2, 0.6)], fdi_enabled=False)
    log = run(sc)
    w2 = log["W2"]
    k = int(np.argmax(w2 < 1.0))
    assert log.t[k] == pytest.approx(10.0)
    ev = log.events_of("fault-injected")
    assert ev[0].t == pytest.approx(10.0) and ev[0].data == {"thruster": 2, "weight": 0.6}


def test_applied_wrench_uses_true_weights():
    sc = Scenario(duration=30.0, faults=[FaultEvent(10.0, 1, 0.5)], fdi_enabled=False)
    log = run(sc)
    f = log.cols("F1", "F2", "F3", "F4")
    u = log.cols("u1", "u2", "u3", "u4")
    w = log.cols("W1", "W2", "W3", "W4")
    unsat = np.abs(f) < sc.bank.f_max
    assert np.allclose(f[unsat], (40.0 * w * u)[unsat])
    tau = log.cols("tau_x", "tau_y", "tau_n")
    assert np.allclose(tau, f @ sc.bank.tconf.T)


def test_healthy_run_holds_station():
    log = run(Scenario(duration=200.0))
    tail = log.t >= 150
    assert log["R"][tail].max() < 0.005
    assert not log.events_of("detected")
    assert log.events_of("armed")


def test_single_fault_detected_and_reconfigured():
    sc = Scenario(duration=250.0, faults=[FaultEvent(200.0, 3, 0.7)])
    log = run(sc)
    det = log.events_of("detected")
    assert det and 200.0 <= det[0].t < 201.0
    ident = log.events_of("identified-single")[0]
    assert ident.data["thrusters"] == [3]
    assert abs(ident.data["delta_w"][0] - 0.3) < 0.05
    assert log.events_of("reconfigured")[0].t == pytest.approx(det[0].t + 25.0, abs=0.011)
    assert abs(log["What3"][-1] - 0.7) < 0.05


def test_freeze_during_fault_holds_d_hat():
    sc = Scenario(duration=250.0, faults=[FaultEvent(200.0, 3, 0.7)])
    sc = replace(sc, control=replace(sc.control, freeze_during_fault=True))
    log = run(sc)
    t_c = log.events_of("detected")[0].t
    window = (log.t > t_c + 0.02) & (log.t < t_c + 35.0)
    dm = log.cols("Dm1", "Dm2", "Dm3")[window]
    assert np.all(dm == dm[0])


def test_events_sorted_and_saturation_paired():
    log = run(Scenario(duration=50.0))
    times = [e.t for e in log.events]
    assert times == sorted(times)
    starts = log.events_of("saturation-start")
    assert starts  # the 10 m approach saturates the thrusters
    for i in range(1, 5):
        on = [e for e in starts if e.data["thruster"] == i]
        off = [e for e in log.events_of("saturation-end") if e.data["thruster"] == i]
        assert len(on) - len(off) in (0, 1)


def test_divergence_raises_with_state():
    sc = Scenario(duration=5.0, nu0=np.array([1e200, 0.0, 0.0]))
    with pytest.raises(SimulationError) as exc:
        run(sc)
    assert "eta" in exc.value.state


def test_tracking_reference():
    sc = Scenario(duration=60.0, eta0=np.array([0.0, 0.0, 0.0]), fdi_enabled=False,
                  env=Environment(current_speed=0.0, noise_surge=0, noise_sway=0, noise_yaw=0))

    def circle(t):
        w = 0.05
        eta = np.array([2 * math.sin(w * t), 2 - 2 * math.cos(w * t), 0.0])
        d1 = np.array([2 * w * math.cos(w * t), 2 * w * math.sin(w * t), 0.0])
        d2 = np.array([-2 * w * w * math.sin(w * t), 2 * w * w * math.cos(w * t), 0.0])
        return eta, d1, d2

    log = run(sc, reference=circle)
    tail = log.t > 40
    assert np.abs(log.cols("e_x", "e_y")[tail]).max() < 0.01


def test_backend_name():
    log = run(Scenario(duration=0.1))
    assert log.backend == kernel.BACKEND
    log = run(Scenario(duration=0.1), backend=kernel.PyLoopKernel)
    assert log.backend.endswith("_kernel_py")
