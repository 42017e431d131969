"""Closed-form kinematics for the 3-DoF legs (HAA roll, HFE pitch, KFE pitch).

Hip frame: origin at the HAA axis, x forward, y left, z up. With
q = (q_haa, q_hfe, q_kfe) and links (l1, l2, l3) = (hip, thigh, shank):

    zeta = l2*cos(q2) + l3*cos(q2+q3)            # leg-plane extension
    px   = -l2*sin(q2) - l3*sin(q2+q3)
    py   =  s*l1*cos(q1) + zeta*sin(q1)          # s = +1 left legs, -1 right
    pz   =  s*l1*sin(q1) - zeta*cos(q1)

q = 0 is the fully extended leg pointing straight down; the knee-bend branch
is fixed per leg by KNEE_SIGN.
"""
import numpy as np
from numba import njit

from .config import KNEE_SIGN, LEG_SIDE_SIGN, RobotModel


@njit(cache=True)
def _fk_leg(q1, q2, q3, l1, l2, l3, s):
    zeta = l2 * np.cos(q2) + l3 * np.cos(q2 + q3)
    px = -l2 * np.sin(q2) - l3 * np.sin(q2 + q3)
    py = s * l1 * np.cos(q1) + zeta * np.sin(q1)
    pz = s * l1 * np.sin(q1) - zeta * np.cos(q1)
    return px, py, pz


@njit(cache=True)
def _jac_leg(q1, q2, q3, l1, l2, l3, s, J):
    c1, s1 = np.cos(q1), np.sin(q1)
    zeta = l2 * np.cos(q2) + l3 * np.cos(q2 + q3)
    dz_dq2 = -l2 * np.sin(q2) - l3 * np.sin(q2 + q3)   # equals px
    dz_dq3 = -l3 * np.sin(q2 + q3)
    dpx_dq2 = -l2 * np.cos(q2) - l3 * np.cos(q2 + q3)
    dpx_dq3 = -l3 * np.cos(q2 + q3)
    J[0, 0] = 0.0
    J[0, 1] = dpx_dq2
    J[0, 2] = dpx_dq3
    J[1, 0] = -s * l1 * s1 + zeta * c1
    J[1, 1] = s1 * dz_dq2
    J[1, 2] = s1 * dz_dq3
    J[2, 0] = s * l1 * c1 + zeta * s1
    J[2, 1] = -c1 * dz_dq2
    J[2, 2] = -c1 * dz_dq3


@njit(cache=True)
def fk_all(q, hip_offsets, links, out):
    """Foot positions of all four legs in the CoM frame; out is (4, 3)."""
    l1, l2, l3 = links[0], links[1], links[2]
    for i in range(4):
        s = 1.0 if (i % 2 == 0) else -1.0
        px, py, pz = _fk_leg(q[3 * i], q[3 * i + 1], q[3 * i + 2], l1, l2, l3, s)
        out[i, 0] = hip_offsets[i, 0] + px
        out[i, 1] = hip_offsets[i, 1] + py
        out[i, 2] = hip_offsets[i, 2] + pz


@njit(cache=True)
def jac_all(q, links, out):
    """Per-leg 3x3 foot Jacobians d(p_foot)/d(q_leg); out is (4, 3, 3)."""
    l1, l2, l3 = links[0], links[1], links[2]
    for i in range(4):
        s = 1.0 if (i % 2 == 0) else -1.0
        _jac_leg(q[3 * i], q[3 * i + 1], q[3 * i + 2], l1, l2, l3, s, out[i])


@njit(cache=True)
def _ik_leg(px, py, pz, l1, l2, l3, s, knee_sign):
    """Joint angles for a hip-frame target; returns (q1, q2, q3, reachable)."""
    reachable = True
    r_sq = py * py + pz * pz
    min_r_sq = l1 * l1 + 1e-12
    if r_sq < min_r_sq:
        # target inside the abduction cylinder: push it out radially
        scale = np.sqrt(min_r_sq / max(r_sq, 1e-16))
        py *= scale
        pz *= scale
        r_sq = min_r_sq
        reachable = False
    zeta = np.sqrt(r_sq - l1 * l1)
    c1 = (s * l1 * py - zeta * pz) / r_sq
    s1 = (zeta * py + s * l1 * pz) / r_sq
    q1 = np.arctan2(s1, c1)

    d = np.sqrt(px * px + zeta * zeta)
    d_max = l2 + l3 - 1e-9
    d_min = abs(l2 - l3) + 1e-9
    if d > d_max or d < d_min:
        target = d_max if d > d_max else d_min
        scale = target / max(d, 1e-16)
        px *= scale
        zeta *= scale
        d = target
        reachable = False
    c3 = (d * d - l2 * l2 - l3 * l3) / (2.0 * l2 * l3)
    if c3 > 1.0:
        c3 = 1.0
    elif c3 < -1.0:
        c3 = -1.0
    q3 = knee_sign * np.arccos(c3)
    q2 = np.arctan2(-px, zeta) - np.arctan2(l3 * np.sin(q3), l2 + l3 * np.cos(q3))
    return q1, q2, q3, reachable


def foot_fk(model: RobotModel, q_leg, leg):
    """Foot position of one leg in the CoM frame."""
    l1, l2, l3 = model.link_lengths
    s = LEG_SIDE_SIGN[leg]
    px, py, pz = _fk_leg(q_leg[0], q_leg[1], q_leg[2], l1, l2, l3, s)
    return model.hip_offsets[leg] + np.array([px, py, pz])


def feet_positions(model: RobotModel, q):
    out = np.empty((4, 3))
    fk_all(np.asarray(q, dtype=float), model.hip_offsets, model.link_lengths, out)
    return out


def leg_jacobian(model: RobotModel, q_leg, leg):
    J = np.empty((3, 3))
    s = LEG_SIDE_SIGN[leg]
    _jac_leg(q_leg[0], q_leg[1], q_leg[2], *model.link_lengths, s, J)
    return J


def leg_jacobians(model: RobotModel, q):
    out = np.empty((4, 3, 3))
    jac_all(np.asarray(q, dtype=float), model.link_lengths, out)
    return out


def leg_ik(model: RobotModel, foot_pos_com, leg):
    """Closed-form IK for one leg; the target is in the CoM frame.

    Unreachable targets are projected onto the workspace boundary and flagged.
    Returns (q_leg, reachable).
    """
    rel = np.asarray(foot_pos_com, dtype=float) - model.hip_offsets[leg]
    q1, q2, q3, reachable = _ik_leg(rel[0], rel[1], rel[2], *model.link_lengths,
                                    LEG_SIDE_SIGN[leg], KNEE_SIGN[leg])
    return np.array([q1, q2, q3]), bool(reachable)


def legs_ik(model: RobotModel, feet_pos_com):
    """IK for all four legs; returns (q (12,), reachable (4,) bools)."""
    q = np.empty(12)
    ok = np.empty(4, dtype=bool)
    for i in range(4):
        q[3 * i:3 * i + 3], ok[i] = leg_ik(model, feet_pos_com[i], i)
    return q, ok
