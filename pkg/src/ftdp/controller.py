"""Adaptive backstepping pose controller.

Step one picks a virtual body velocity ``alpha`` that drives the pose error
down; step two computes the body wrench that makes the real velocity follow
it, with an adaptive bound ``D_hat`` on the unknown disturbance compensated
through a smooth sign-like function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .plant import PlantParams, coriolis, rotation, wrap_angle

KAPPA = 0.2785  # root of kappa = exp(-(kappa + 1))


class ControllerDivergence(RuntimeError):
    pass


def _vec(values):
    return np.array(values, dtype=float).reshape(3)


@dataclass
class ControllerGains:
    """Diagonal gains, stored as 3-vectors."""

    gamma1: np.ndarray = field(default_factory=lambda: _vec([1.0, 1.0, 1500.0]))
    gamma2: np.ndarray = field(default_factory=lambda: _vec([1.0, 1.0, 0.6]))
    a1: np.ndarray = field(default_factory=lambda: _vec([1.5, 1.5, 5.0]))
    a2: np.ndarray = field(default_factory=lambda: _vec([1.0, 1.0, 12.0]))
    eps: np.ndarray = field(default_factory=lambda: _vec([0.1, 0.1, 0.1]))
    kappa: float = KAPPA

    def __post_init__(self):
        for name in ("gamma1", "gamma2", "a1", "a2", "eps"):
            v = _vec(getattr(self, name))
            if np.any(v <= 0) or not np.all(np.isfinite(v)):
                raise ValueError(f"gain {name} must be finite and strictly positive")
            setattr(self, name, v)
        if not self.kappa > 0:
            raise ValueError("kappa must be positive")


@dataclass
class Reference:
    """Desired pose and its first two derivatives (navigation frame)."""

    eta: np.ndarray
    eta_dot: np.ndarray = field(default_factory=lambda: np.zeros(3))
    eta_ddot: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        self.eta = _vec(self.eta)
        self.eta_dot = _vec(self.eta_dot)
        self.eta_ddot = _vec(self.eta_ddot)


@dataclass
class ControllerState:
    d_hat: np.ndarray = field(default_factory=lambda: np.zeros(3))
    cap: np.ndarray = field(default_factory=lambda: np.full(3, math.inf))  # per-channel |D_hat| limit
    freeze: bool = False

    def __post_init__(self):
        self.d_hat = _vec(self.d_hat)
        self.cap = np.broadcast_to(np.asarray(self.cap, dtype=float), (3,)).copy()
        if np.any(self.cap <= 0):
            raise ValueError("adaptation cap must be positive")


def heading_error(desired: float, actual: float) -> float:
    return wrap_angle(desired - actual)


def tracking_errors(ref: Reference, eta, nu, gains: ControllerGains):
    """Pose error, stabilising velocity and velocity error.

    Returns ``(e_eta, alpha, e_nu)`` with the heading error taken on the
    circle.
    """
    eta = _vec(eta)
    nu = _vec(nu)
    e_eta = ref.eta - eta
    e_eta[2] = heading_error(ref.eta[2], eta[2])
    alpha = rotation(eta[2]).T @ (ref.eta_dot + gains.a1 / gains.gamma1 * e_eta)
    return e_eta, alpha, alpha - nu


def alpha_dot(ref: Reference, eta, nu, alpha, gains: ControllerGains) -> np.ndarray:
    """Analytic derivative of the stabilising velocity.

    With ``J_dot = J S(r)``, ``d/dt J^T = -S(r) J^T``.
    """
    eta = _vec(eta)
    nu = _vec(nu)
    j = rotation(eta[2])
    e_dot = ref.eta_dot - j @ nu
    r = nu[2]
    s_alpha = np.array([-r * alpha[1], r * alpha[0], 0.0])
    return j.T @ (ref.eta_ddot + gains.a1 / gains.gamma1 * e_dot) - s_alpha


def smooth_phi(xi, kappa: float = KAPPA, eps: float = 0.1):
    """Smooth stand-in for sign(): ``tanh(kappa * xi / eps)``.

    Satisfies ``|xi| <= xi * phi(xi) + eps`` for every real ``xi``.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    return np.tanh(kappa * np.asarray(xi, dtype=float) / eps)


def disturbance_compensation(d_hat, e_nu, gains: ControllerGains) -> np.ndarray:
    d_hat = _vec(d_hat)
    return d_hat * np.tanh(gains.kappa * d_hat * _vec(e_nu) / gains.eps)


def control_law(ref: Reference, eta, nu, state: ControllerState, plant: PlantParams,
                gains: ControllerGains, a_dot=None) -> np.ndarray:
    """Designed body wrench ``tau_c``.

    ``a_dot`` overrides the analytic derivative of ``alpha`` (used by the
    filtered finite-difference mode).
    """
    eta = _vec(eta)
    nu = _vec(nu)
    e_eta, alpha, e_nu = tracking_errors(ref, eta, nu, gains)
    if a_dot is None:
        a_dot = alpha_dot(ref, eta, nu, alpha, gains)
    j = rotation(eta[2])
    tau_c = (
        gains.a2 * e_nu
        + j.T @ (gains.gamma1 * e_eta)
        + plant.mass @ a_dot
        + (coriolis(plant.mass, nu) + plant.damping(nu)) @ alpha
        + plant.gravity
        + disturbance_compensation(state.d_hat, e_nu, gains)
    )
    if not np.all(np.isfinite(tau_c)):
        raise ControllerDivergence(f"non-finite control output at eta={eta.tolist()}")
    return tau_c


def adapt(state: ControllerState, e_nu, gains: ControllerGains, dt: float) -> ControllerState:
    """Explicit Euler step of ``D_hat_dot = Gamma2^-1 e_nu``."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if state.freeze:
        return ControllerState(state.d_hat.copy(), state.cap, state.freeze)
    d_hat = state.d_hat + _vec(e_nu) / gains.gamma2 * dt
    d_hat = np.clip(d_hat, -state.cap, state.cap)
    return ControllerState(d_hat, state.cap, state.freeze)
