"""Vertical template model: critically-damped mass-spring-damper reference,
stiffness selection and orbital-energy diagnostics.

The vertical CoM after touch down follows an autonomous critically-damped
oscillator around the rest height l0. Both poles sit at lambda = -sqrt(k/m),
so the trajectory admits the closed forms

    cz_dot(t) = exp(lambda*dt) * (lambda*dt + 1) * cz_dot_td
    cz(t)     = exp(lambda*dt) * dt * cz_dot_td + l0        (dt = t - t_td)

and the horizontal pendulum frequency follows as
omega^2(t) = (g + cz_ddot(t)) / cz(t).
"""
from dataclasses import dataclass

import numpy as np

from .config import VhsipParams


class InvalidParameter(ValueError):
    pass


@dataclass
class ComState:
    """CoM position/velocity/acceleration, terrain frame."""
    c: np.ndarray
    c_dot: np.ndarray
    c_ddot: np.ndarray

    @classmethod
    def zeros(cls):
        return cls(np.zeros(3), np.zeros(3), np.zeros(3))


@dataclass
class VerticalTrajectory:
    """Sampled vertical reference; all arrays have length N+1."""
    t: np.ndarray
    cz: np.ndarray
    cz_dot: np.ndarray
    cz_ddot: np.ndarray
    omega_sq: np.ndarray


def stiffness_clearance_bound(m, cz_dot_td, delta_z, l0):
    """Smallest stiffness keeping the trajectory minimum at or above delta_z.

    The unique minimum of the closed-form height is
    cz_min = l0 - sqrt(m/k)*|cz_dot_td|/e; solving cz_min = delta_z for k gives
    k1 = m * cz_dot_td^2 / (e*(delta_z - l0))^2.
    """
    if l0 <= delta_z:
        raise InvalidParameter("need l0 > delta_z")
    if cz_dot_td > 0:
        raise InvalidParameter("touch-down vertical velocity must be <= 0")
    return m * cz_dot_td ** 2 / (np.e * (delta_z - l0)) ** 2


def stiffness_settling_bound(m, t_c):
    """Smallest stiffness settling within t_c.

    A critically damped pair of poles at lambda is steady after 7/|lambda|
    (e^-7 ~ 9e-4 residual), so |lambda| >= 7/t_c, i.e. k >= m*(7/t_c)^2.
    """
    if t_c <= 0:
        raise InvalidParameter("t_c must be positive")
    return m * (7.0 / t_c) ** 2


def select_stiffness(params: VhsipParams, cz_dot_td):
    """(k, d) meeting both the clearance and the settling bound, critically damped."""
    k1 = stiffness_clearance_bound(params.m, cz_dot_td, params.delta_z, params.l0)
    k2 = stiffness_settling_bound(params.m, params.t_c)
    k = max(k1, k2)
    return k, 2.0 * np.sqrt(k * params.m)


def vertical_reference(params: VhsipParams, cz_dot_td):
    """Sample the closed-form reference on t = i*Ts, i = 0..N (t_td = 0)."""
    lam = -np.sqrt(params.k / params.m)
    t = np.arange(params.N + 1) * params.Ts
    e = np.exp(lam * t)
    cz = e * t * cz_dot_td + params.l0
    cz_dot = e * (lam * t + 1.0) * cz_dot_td
    # force balance with no external vertical force: m*a + d*v + k*(z - l0) = 0
    cz_ddot = -(params.d * cz_dot + params.k * (cz - params.l0)) / params.m
    omega_sq = (params.g + cz_ddot) / cz
    return VerticalTrajectory(t=t, cz=cz, cz_dot=cz_dot, cz_ddot=cz_ddot, omega_sq=omega_sq)


def orbital_energy_lip(r, r_dot, h, g=9.81):
    """Constant-height orbital energy E = h^2*r_dot^2/2 - g*h*r^2/2.

    E > 0: the CoM passes over the pivot; E < 0: it reverses; E = 0: it
    converges to rest above the pivot (capture).
    """
    if h <= 0:
        raise InvalidParameter("h must be positive")
    return 0.5 * h ** 2 * r_dot ** 2 - 0.5 * g * h * r ** 2
