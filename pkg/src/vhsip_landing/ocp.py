"""Horizontal planner: condensed single-shooting optimal control over the
time-varying pendulum dynamics.

State x = (position, velocity) per horizontal axis with

    x_{k+1} = A_k x_k + B_k u,   A_k = I + Ts*[[0,1],[w2_k,0]],  B_k = Ts*[0,-w2_k]

(forward Euler). Condensing x_k = Px[k] x0 + Pxu[k] u turns the terminal-cost
problem into an unconstrained scalar quadratic in the pivot location u, solved
in closed form. The same machinery serves the x and y axes since they share
omega^2(t).
"""
from dataclasses import dataclass

import numpy as np
from numba import njit

from .config import VhsipParams
from .vhsip import ComState, select_stiffness, vertical_reference


class IllPosedCost(ValueError):
    pass


@dataclass
class LtvRollout:
    A_bar: np.ndarray   # (N+1, 2, 2); A_bar[N] is unused padding
    B_bar: np.ndarray   # (N+1, 2)
    Px: np.ndarray      # (N+1, 2, 2)
    Pxu: np.ndarray     # (N+1, 2)


@dataclass
class CostMatrices:
    Qx: np.ndarray      # (2, 2)
    Qu: float
    Qxu: np.ndarray     # (2,)
    wp: float
    wv: float
    wu: float


@dataclass
class LandingPlan:
    """Pivot location plus sampled CoM and Euler-angle references (N+1 samples)."""
    u_o: np.ndarray            # (2,) terrain frame
    t: np.ndarray              # (N+1,)
    com_pos: np.ndarray        # (N+1, 3)
    com_vel: np.ndarray        # (N+1, 3)
    com_acc: np.ndarray        # (N+1, 3)
    euler: np.ndarray          # (N+1, 3)
    euler_rate: np.ndarray     # (N+1, 3)
    omega_sq: np.ndarray       # (N+1,)
    td_state: ComState
    k: float                   # selected stiffness
    d: float

    def com_state(self, i):
        return ComState(self.com_pos[i], self.com_vel[i], self.com_acc[i])


@njit(cache=True)
def _rollout_kernel(omega_sq, Ts):
    n = omega_sq.shape[0]
    A_bar = np.zeros((n, 2, 2))
    B_bar = np.zeros((n, 2))
    Px = np.zeros((n, 2, 2))
    Pxu = np.zeros((n, 2))
    Px[0, 0, 0] = 1.0
    Px[0, 1, 1] = 1.0
    for k in range(n):
        A_bar[k, 0, 0] = 1.0
        A_bar[k, 0, 1] = Ts
        A_bar[k, 1, 0] = Ts * omega_sq[k]
        A_bar[k, 1, 1] = 1.0
        B_bar[k, 1] = -Ts * omega_sq[k]
    for k in range(1, n):
        a = A_bar[k - 1]
        Px[k, 0, 0] = a[0, 0] * Px[k - 1, 0, 0] + a[0, 1] * Px[k - 1, 1, 0]
        Px[k, 0, 1] = a[0, 0] * Px[k - 1, 0, 1] + a[0, 1] * Px[k - 1, 1, 1]
        Px[k, 1, 0] = a[1, 0] * Px[k - 1, 0, 0] + a[1, 1] * Px[k - 1, 1, 0]
        Px[k, 1, 1] = a[1, 0] * Px[k - 1, 0, 1] + a[1, 1] * Px[k - 1, 1, 1]
        Pxu[k, 0] = a[0, 0] * Pxu[k - 1, 0] + a[0, 1] * Pxu[k - 1, 1] + B_bar[k - 1, 0]
        Pxu[k, 1] = a[1, 0] * Pxu[k - 1, 0] + a[1, 1] * Pxu[k - 1, 1] + B_bar[k - 1, 1]
    return A_bar, B_bar, Px, Pxu


@njit(cache=True)
def _forward_kernel(x0, u, omega_sq, Ts):
    n = omega_sq.shape[0]
    pos = np.empty(n)
    vel = np.empty(n)
    pos[0] = x0[0]
    vel[0] = x0[1]
    for k in range(n - 1):
        pos[k + 1] = pos[k] + Ts * vel[k]
        vel[k + 1] = vel[k] + Ts * omega_sq[k] * (pos[k] - u)
    acc = omega_sq * (pos - u)
    return pos, vel, acc


def build_rollout(omega_sq, Ts, N):
    """Condensing stacks for an omega^2 profile with N+1 samples."""
    omega_sq = np.asarray(omega_sq, dtype=float)
    if omega_sq.shape != (N + 1,):
        raise ValueError(f"omega_sq must have {N + 1} entries, got {omega_sq.shape}")
    A_bar, B_bar, Px, Pxu = _rollout_kernel(omega_sq, Ts)
    return LtvRollout(A_bar=A_bar, B_bar=B_bar, Px=Px, Pxu=Pxu)


def build_cost(rollout: LtvRollout, wp, wv, wu):
    """Terminal cost wp*|pos_N - u|^2 + wv*|vel_N|^2 + wu*u^2 condensed to
    J(x0, u) = x0' Qx x0 + Qu u^2 + 2 x0' Qxu u."""
    if wp < 0 or wv < 0 or wu < 0 or wp + wu <= 0:
        raise IllPosedCost("need nonnegative weights with wp + wu > 0")
    PxN = rollout.Px[-1]
    PxuN = rollout.Pxu[-1]
    cp = PxN[0, :]          # Cp @ Px_N
    cv = PxN[1, :]
    bp = PxuN[0] - 1.0      # Cp @ Pxu_N - 1
    bv = PxuN[1]
    Qx = wp * np.outer(cp, cp) + wv * np.outer(cv, cv)
    Qu = wp * bp * bp + wv * bv * bv + wu
    Qxu = wp * cp * bp + wv * cv * bv
    if Qu <= 0.0:
        raise IllPosedCost("Qu must be positive")
    return CostMatrices(Qx=Qx, Qu=float(Qu), Qxu=Qxu, wp=wp, wv=wv, wu=wu)


def cost_value(cost: CostMatrices, x0, u):
    x0 = np.asarray(x0, dtype=float)
    return float(x0 @ cost.Qx @ x0 + cost.Qu * u * u + 2.0 * (x0 @ cost.Qxu) * u)


def optimal_virtual_foot(cost: CostMatrices, x0):
    """Closed-form minimizer u = -(Qxu . x0) / Qu."""
    if cost.Qu <= 0.0:
        raise IllPosedCost("Qu must be positive")
    x0 = np.asarray(x0, dtype=float)
    return float(-(cost.Qxu @ x0) / cost.Qu)


def _euler_profile(t, lam, phi0, phi_rate0):
    """Critically damped decay to zero from (phi0, phi_rate0), per axis.

    phi(t) = exp(lam t) * (phi0 + (phi_rate0 - lam*phi0) t) solves the
    double-pole dynamics with the measured angle and rate as initial state.
    """
    e = np.exp(lam * t)[:, None]
    b = phi_rate0 - lam * phi0
    phi = e * (phi0[None, :] + np.outer(t, b))
    phi_rate = e * (phi_rate0[None, :] + lam * np.outer(t, b))
    return phi, phi_rate


def plan_landing(params: VhsipParams, c_dot_td, euler_td=None, euler_rate_td=None,
                 weights=(1.0, 1.0, 1e-6)):
    """Full landing reference for a touch down with velocity c_dot_td.

    Re-selects the virtual stiffness for the given vertical velocity, samples
    the vertical reference, solves the x and y pivot locations independently
    and rolls out the planned horizontal motion. Euler angles decay to
    horizontal with the same pole as the vertical reference.
    """
    c_dot_td = np.asarray(c_dot_td, dtype=float)
    if c_dot_td[2] > 0:
        raise ValueError("touch-down vertical velocity must be <= 0")
    euler_td = np.zeros(3) if euler_td is None else np.asarray(euler_td, dtype=float)
    euler_rate_td = np.zeros(3) if euler_rate_td is None else np.asarray(euler_rate_td, dtype=float)
    wp, wv, wu = weights

    k, d = select_stiffness(params, c_dot_td[2])
    p = params.with_stiffness(k)
    vert = vertical_reference(p, c_dot_td[2])

    rollout = build_rollout(vert.omega_sq, p.Ts, p.N)
    cost = build_cost(rollout, wp, wv, wu)

    n = p.N + 1
    com_pos = np.zeros((n, 3))
    com_vel = np.zeros((n, 3))
    com_acc = np.zeros((n, 3))
    u_o = np.zeros(2)
    for axis in range(2):
        x0 = np.array([0.0, c_dot_td[axis]])   # CoM starts at the terrain origin
        u_o[axis] = optimal_virtual_foot(cost, x0)
        pos, vel, acc = _forward_kernel(x0, u_o[axis], vert.omega_sq, p.Ts)
        com_pos[:, axis] = pos
        com_vel[:, axis] = vel
        com_acc[:, axis] = acc
    com_pos[:, 2] = vert.cz
    com_vel[:, 2] = vert.cz_dot
    com_acc[:, 2] = vert.cz_ddot

    lam = -np.sqrt(k / p.m)
    euler, euler_rate = _euler_profile(vert.t, lam, euler_td, euler_rate_td)

    td_state = ComState(c=np.array([0.0, 0.0, p.l0]), c_dot=c_dot_td.copy(),
                        c_ddot=np.array([com_acc[0, 0], com_acc[0, 1], vert.cz_ddot[0]]))
    return LandingPlan(u_o=u_o, t=vert.t, com_pos=com_pos, com_vel=com_vel,
                       com_acc=com_acc, euler=euler, euler_rate=euler_rate,
                       omega_sq=vert.omega_sq, td_state=td_state, k=k, d=d)
