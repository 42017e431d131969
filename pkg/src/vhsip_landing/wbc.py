"""Post-touch-down wrench control: Cartesian impedance at the CoM, gravity and
acceleration feed-forward, and friction-constrained mapping of the desired
wrench to ground reaction forces and joint torques.
"""
from dataclasses import dataclass

import numpy as np

from .config import RobotModel
from .qp import ActiveSetSolver, QpProblem
from .rotations import log_so3, skew


@dataclass
class Wrench:
    lin: np.ndarray   # force [N]
    ang: np.ndarray   # torque [Nm]

    def __add__(self, other):
        return Wrench(self.lin + other.lin, self.ang + other.ang)

    def stack(self):
        return np.concatenate([self.lin, self.ang])


def grasp_matrix(feet_rel_com):
    """G (6 x 3n) mapping stacked foot forces to the net CoM wrench.

    feet_rel_com: (n, 3) foot positions relative to the CoM, same frame as
    the forces.
    """
    n = feet_rel_com.shape[0]
    G = np.zeros((6, 3 * n))
    for i in range(n):
        G[:3, 3 * i:3 * i + 3] = np.eye(3)
        G[3:, 3 * i:3 * i + 3] = skew(feet_rel_com[i])
    return G


def feedback_wrench(com_pos_ref, com_pos, com_vel_ref, com_vel,
                    R_ref, R, omega_ref, omega, kp_lin, kd_lin, kp_ang, kd_ang):
    """PD impedance: linear on the CoM error, angular on the rotation-vector
    error of R_ref relative to R."""
    lin = kp_lin * (com_pos_ref - com_pos) + kd_lin * (com_vel_ref - com_vel)
    ang = kp_ang * log_so3(R_ref @ R.T) + kd_ang * (omega_ref - omega)
    return Wrench(lin=lin, ang=ang)


def gravity_wrench(model: RobotModel, g=9.81):
    """Constant force cancelling the robot weight."""
    return Wrench(lin=np.array([0.0, 0.0, model.m * g]), ang=np.zeros(3))


def feedforward_wrench(model: RobotModel, com_acc_ref, omega_dot_ref, R):
    """Reference-acceleration feed-forward; R maps body to world, so the
    trunk inertia is expressed in the world frame before multiplying."""
    lin = model.m * np.asarray(com_acc_ref, dtype=float)
    ang = R @ model.inertia @ R.T @ np.asarray(omega_dot_ref, dtype=float)
    return Wrench(lin=lin, ang=ang)


def friction_rows(n_feet, mu, f_min):
    """Constraint rows (C, lb) with C f >= lb: linearized cone plus a minimum
    normal force per foot (5 rows per foot)."""
    C = np.zeros((5 * n_feet, 3 * n_feet))
    lb = np.zeros(5 * n_feet)
    for i in range(n_feet):
        r, c = 5 * i, 3 * i
        C[r + 0, c + 0], C[r + 0, c + 2] = -1.0, mu    # mu*fz - fx >= 0
        C[r + 1, c + 0], C[r + 1, c + 2] = 1.0, mu     # mu*fz + fx >= 0
        C[r + 2, c + 1], C[r + 2, c + 2] = -1.0, mu
        C[r + 3, c + 1], C[r + 3, c + 2] = 1.0, mu
        C[r + 4, c + 2] = 1.0                          # fz >= f_min
        lb[r + 4] = f_min
    return C, lb


def distribute_forces(grasp, wrench_d: Wrench, mu, f_min=0.0, solver=None,
                      force_reg=1e-3):
    """Least-squares force distribution under the linearized friction cones.

    force_reg penalizes |f|^2, which resolves the grasp-matrix null space (12
    unknowns, 6 wrench rows) and keeps the Hessian well conditioned.
    Returns (forces (n, 3), QpSolution). A persistent solver can be passed in
    to warm start successive control ticks.
    """
    G = grasp
    n_feet = G.shape[1] // 3
    w = wrench_d.stack()
    H = G.T @ G + force_reg * np.eye(3 * n_feet)
    q = -G.T @ w
    C, lb = friction_rows(n_feet, mu, f_min)
    problem = QpProblem(H=H, q=q, C=C, lb=lb)
    if solver is None:
        solver = ActiveSetSolver()
        sol = solver.solve(problem, warm_start=False)
    else:
        sol = solver.solve(problem)
    return sol.z.reshape(n_feet, 3), sol


def torques_from_forces(model: RobotModel, jacobians, forces_body, coriolis=None):
    """Map desired foot forces (body frame) to joint torques.

    tau_i = S_i C(q) q_dot - J_i^T f_i; with massless legs the Coriolis term
    vanishes unless supplied. Output is clamped to tau_max with a flag.
    """
    tau = np.zeros(12)
    for i in range(4):
        tau[3 * i:3 * i + 3] = -jacobians[i].T @ forces_body[i]
    if coriolis is not None:
        tau += coriolis
    clipped = np.clip(tau, -model.tau_max, model.tau_max)
    saturated = bool(np.any(clipped != tau))
    return clipped, saturated
