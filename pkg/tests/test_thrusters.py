import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from ftdp.thrusters import (
    AllocationError, FaultEvent, ScheduleError, ThrusterBank, ThrusterGeometry, actuate, allocate,
    apply_fault_schedule, build_tconf, thrust, validate_schedule,
)

wrench = arrays(float, 3, elements=st.floats(-50, 50, allow_nan=False))
weights = arrays(float, 4, elements=st.floats(0.05, 1.0))


def test_tconf_default_values():
    c = math.cos(math.pi / 4)
    t = build_tconf(ThrusterGeometry())
    expected = np.array([[c, c, -c, -c], [-c, c, -c, c], [-0.1888, 0.1888, 0.1888, -0.1888]])
    assert np.allclose(t, expected)
    assert ThrusterGeometry().a == pytest.approx(0.1888 / c)


def test_geometry_rejects_sideways_thrusters():
    with pytest.raises(ValueError):
        ThrusterGeometry(alpha=math.pi / 2)


def test_allocation_healthy_example():
    bank = ThrusterBank()
    u = allocate([10.0, 0.0, 0.0], bank)
    assert np.allclose(actuate(u, bank), [10.0, 0.0, 0.0])
    assert np.allclose(np.abs(u), np.abs(u[0]))


@given(wrench, weights)
def test_allocation_round_trip_when_estimate_is_exact(tau_c, w):
    bank = ThrusterBank(w_true=w, w_hat=w)
    assert np.allclose(actuate(allocate(tau_c, bank), bank), tau_c, atol=1e-9)


@given(wrench, wrench, st.floats(-3, 3))
def test_allocation_linear(a, b, s):
    bank = ThrusterBank()
    assert np.allclose(allocate(a + s * b, bank), allocate(a, bank) + s * allocate(b, bank), atol=1e-9)


def test_reduced_bank_uses_three_columns():
    bank = ThrusterBank(w_true=[1, 1, 0, 1], w_hat=[1, 1, 0, 1])
    tau_c = np.array([4.0, -2.0, 0.5])
    u = allocate(tau_c, bank)
    assert u[2] == 0.0
    assert np.allclose(actuate(u, bank), tau_c)


def test_two_failed_thrusters_cannot_allocate():
    with pytest.raises(AllocationError):
        ThrusterBank(w_hat=[1, 0, 0, 1]).allocation_matrix()


def test_design_forces_independent_of_estimate():
    tau_c = np.array([3.0, 1.0, -0.4])
    a = ThrusterBank().design_forces(tau_c)
    b = ThrusterBank(w_hat=[0.3, 0.9, 0.6, 1.0]).design_forces(tau_c)
    assert np.allclose(a, b)


def test_saturation():
    bank = ThrusterBank()
    f = thrust([2.0, -2.0, 0.5, 0.0], bank)
    assert np.allclose(f, [40.0, -40.0, 20.0, 0.0])
    assert np.allclose(thrust([2.0, 0, 0, 0], bank, saturate=False), [80.0, 0, 0, 0])


def test_bank_validation():
    with pytest.raises(ValueError):
        ThrusterBank(gains=[40, 40, 0, 40])
    with pytest.raises(ValueError):
        ThrusterBank(w_true=[1, 1, 1.2, 1])


def test_fault_event_validation():
    with pytest.raises(ScheduleError):
        FaultEvent(1.0, 5, 0.5)
    with pytest.raises(ScheduleError):
        FaultEvent(1.0, 2, -0.1)


def test_schedule_validation():
    ok = [FaultEvent(10, 1, 0.8), FaultEvent(10, 3, 0.7), FaultEvent(20, 1, 0.0)]
    assert validate_schedule(ok) == ok
    with pytest.raises(ScheduleError, match="earlier"):
        validate_schedule([FaultEvent(20, 1, 0.8), FaultEvent(10, 2, 0.7)])
    with pytest.raises(ScheduleError, match="rises"):
        validate_schedule([FaultEvent(10, 1, 0.5), FaultEvent(20, 1, 0.8)])
    with pytest.raises(ScheduleError, match="repeated"):
        validate_schedule([FaultEvent(10, 1, 0.8), FaultEvent(10, 1, 0.7)])


def test_apply_fault_schedule():
    bank = ThrusterBank()
    evs = [FaultEvent(10, 2, 0.7), FaultEvent(30, 4, 0.0)]
    assert np.allclose(apply_fault_schedule(bank, evs, 5).w_true, 1.0)
    mid = apply_fault_schedule(bank, evs, 10)
    assert np.allclose(mid.w_true, [1, 0.7, 1, 1])
    assert np.allclose(mid.w_hat, 1.0)
    assert np.allclose(apply_fault_schedule(bank, evs, 99).w_true, [1, 0.7, 1, 0])
    assert np.allclose(bank.w_true, 1.0)
