"""Three-DOF horizontal plant of an underwater vehicle.

Pose ``eta = [x, y, psi]`` lives in the navigation frame and velocity
``nu = [u, v, r]`` in the body frame. Hydrodynamics follow the usual
mass / Coriolis / damping split; the sea current enters through the
velocity relative to the water (or, optionally, as a quasi-static force).

This module is the readable numpy reference. The closed-loop runner uses the
scalar kernels in :mod:`ftdp.kernel`, which are tested against it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

CURRENT_MODES = ("relative", "force")


class IntegrationError(RuntimeError):
    """The plant state became non-finite."""


def wrap_angle(a: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    a = math.fmod(a + math.pi, 2.0 * math.pi)
    if a <= 0.0:
        a += 2.0 * math.pi
    return a - math.pi


def _diag(values):
    return np.diag(np.asarray(values, dtype=float))


def _default_mass():
    # 13.5 kg hull, 0.37 kg m^2 yaw inertia; equal surge/sway added mass so the
    # Munk moment of a steady current vanishes.
    return _diag([13.5 + 6.7, 13.5 + 6.7, 0.37 + 0.222])


def _default_linear_damping():
    return _diag([2.8, 4.2, 0.35])


def _default_quadratic_damping():
    return _diag([13.9, 57.7, 1.05])


@dataclass
class PlantParams:
    """Rigid-body and hydrodynamic coefficients.

    The defaults are a surrogate set of the right order of magnitude for a
    small work-class ROV; every entry can be overridden from a scenario file.
    Damping is ``D(nu) = linear_damping + quadratic_damping @ diag(|nu|)``.
    """

    mass: np.ndarray = field(default_factory=_default_mass)
    linear_damping: np.ndarray = field(default_factory=_default_linear_damping)
    quadratic_damping: np.ndarray = field(default_factory=_default_quadratic_damping)
    gravity: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        self.mass = np.array(self.mass, dtype=float).reshape(3, 3)
        self.linear_damping = np.array(self.linear_damping, dtype=float).reshape(3, 3)
        self.quadratic_damping = np.array(self.quadratic_damping, dtype=float).reshape(3, 3)
        self.gravity = np.array(self.gravity, dtype=float).reshape(3)
        self.validate()

    def validate(self):
        m = self.mass
        if not np.all(np.isfinite(m)) or not np.allclose(m, m.T, rtol=0, atol=1e-12):
            raise ValueError("mass matrix must be finite and symmetric")
        if np.linalg.eigvalsh(m).min() <= 0:
            raise ValueError("mass matrix must be positive definite")
        sym = 0.5 * (self.linear_damping + self.linear_damping.T)
        if np.linalg.eigvalsh(sym).min() <= 0:
            raise ValueError("linear damping must be positive definite")
        if np.any(np.diag(self.quadratic_damping) < 0):
            raise ValueError("quadratic damping diagonal must be non-negative")

    @property
    def mass_inv(self) -> np.ndarray:
        return np.linalg.inv(self.mass)

    def damping(self, nu) -> np.ndarray:
        return self.linear_damping + self.quadratic_damping * np.abs(np.asarray(nu, dtype=float))


@dataclass
class Environment:
    """Sea current plus bounded random forcing.

    ``current_heading`` is the direction the water flows toward, in radians
    in the navigation frame. Noise amplitudes shape the per-step draw
    ``[A_u (1 - 2 r), A_v (1 - 2 r), A_r (1 - r)]`` with ``r ~ U[0, 1]``.
    """

    current_speed: float = 1.0
    current_heading: float = math.radians(-120.0)
    noise_surge: float = 1.0
    noise_sway: float = 1.0
    noise_yaw: float = 0.03
    seed: int = 0
    current_mode: str = "relative"

    def __post_init__(self):
        if self.current_speed < 0:
            raise ValueError("current speed must be non-negative")
        if min(self.noise_surge, self.noise_sway, self.noise_yaw) < 0:
            raise ValueError("noise amplitudes must be non-negative")
        if self.current_mode not in CURRENT_MODES:
            raise ValueError(f"current_mode must be one of {CURRENT_MODES}")

    @property
    def current_nav(self) -> np.ndarray:
        return self.current_speed * np.array([math.cos(self.current_heading), math.sin(self.current_heading)])


def rotation(psi: float) -> np.ndarray:
    c, s = math.cos(psi), math.sin(psi)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def coriolis(mass, nu) -> np.ndarray:
    """Skew-symmetric Coriolis/centripetal matrix built from ``mass @ nu``."""
    mv = np.asarray(mass, dtype=float) @ np.asarray(nu, dtype=float)
    return np.array([
        [0.0, 0.0, -mv[1]],
        [0.0, 0.0, mv[0]],
        [mv[1], -mv[0], 0.0],
    ])


def current_body(env: Environment, psi: float) -> np.ndarray:
    """Current velocity expressed in the body frame (zero yaw rate)."""
    vc = env.current_nav
    c, s = math.cos(psi), math.sin(psi)
    return np.array([c * vc[0] + s * vc[1], -s * vc[0] + c * vc[1], 0.0])


def current_force(env: Environment, p: PlantParams, psi: float) -> np.ndarray:
    """Quasi-static current load on a hull at rest, used by ``force`` mode."""
    vc = current_body(env, psi)
    return p.damping(vc) @ vc - coriolis(p.mass, vc) @ vc


def dynamics_rhs(eta, nu, tau, env: Environment, p: PlantParams, t: float = 0.0, d=None):
    """Time derivatives ``(eta_dot, nu_dot)``.

    ``d`` is the random forcing held over the step (zero if omitted). ``t``
    is accepted for interface symmetry; the model is time invariant.
    """
    eta = np.asarray(eta, dtype=float)
    nu = np.asarray(nu, dtype=float)
    forcing = np.asarray(tau, dtype=float) - p.gravity
    if d is not None:
        forcing = forcing + np.asarray(d, dtype=float)
    if env.current_mode == "relative":
        nu_r = nu - current_body(env, eta[2])
    else:
        nu_r = nu
        forcing = forcing + current_force(env, p, eta[2])
    hydro = coriolis(p.mass, nu_r) @ nu_r + p.damping(nu_r) @ nu_r
    eta_dot = rotation(eta[2]) @ nu
    nu_dot = np.linalg.solve(p.mass, forcing - hydro)
    return eta_dot, nu_dot


class PlantState(NamedTuple):
    eta: np.ndarray
    nu: np.ndarray


def step(state: PlantState, tau, dt: float, env: Environment, p: PlantParams, d=None) -> PlantState:
    """One classical RK4 step with ``tau`` and ``d`` held constant."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    x0 = np.concatenate([state.eta, state.nu]).astype(float)

    def f(x):
        a, b = dynamics_rhs(x[:3], x[3:], tau, env, p, d=d)
        return np.concatenate([a, b])

    with np.errstate(over="ignore", invalid="ignore"):  # checked below
        k1 = f(x0)
        k2 = f(x0 + 0.5 * dt * k1)
        k3 = f(x0 + 0.5 * dt * k2)
        k4 = f(x0 + dt * k3)
        x1 = x0 + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(x1)):
        raise IntegrationError(f"non-finite plant state after step from {x0.tolist()}")
    x1[2] = wrap_angle(x1[2])
    return PlantState(x1[:3], x1[3:])


def disturbance(env: Environment, rng: np.random.Generator) -> np.ndarray:
    """Draw one random forcing vector."""
    r = rng.random(3)
    return np.array([
        env.noise_surge * (1.0 - 2.0 * r[0]),
        env.noise_sway * (1.0 - 2.0 * r[1]),
        env.noise_yaw * (1.0 - r[2]),
    ])


def disturbance_series(env: Environment, n: int, seed: int | None = None) -> np.ndarray:
    """``n`` forcing vectors drawn in one block; same stream as :func:`disturbance`."""
    rng = np.random.default_rng(env.seed if seed is None else seed)
    r = rng.random((n, 3))
    out = np.empty((n, 3))
    out[:, 0] = env.noise_surge * (1.0 - 2.0 * r[:, 0])
    out[:, 1] = env.noise_sway * (1.0 - 2.0 * r[:, 1])
    out[:, 2] = env.noise_yaw * (1.0 - r[:, 2])
    return out
