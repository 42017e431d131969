import numpy as np
import pytest

from vhsip_landing.config import Gains, RobotModel, VhsipParams
from vhsip_landing.controller import (
    JointState, LandingController, Sensors, TerrainFrame, UnstableGain,
    VelocityEstimate, estimate_grf, joint_pd, joint_velocity_reference,
    kinematic_adjustment, terrain_frame_from_orientation, update_velocity)
from vhsip_landing.legs import leg_jacobians, legs_ik
from vhsip_landing.rotations import rot_z

MODEL = RobotModel()


def stance_joints(tau=None):
    feet = MODEL.homing_feet(0.27) - np.array([0.0, 0.0, 0.27])
    q, _ = legs_ik(MODEL, feet)
    return JointState(q=q, q_dot=np.zeros(12),
                      tau=np.zeros(12) if tau is None else tau)


def test_estimate_grf_recovers_known_forces():
    joints = stance_joints()
    jacs = leg_jacobians(MODEL, joints.q)
    f_true = np.array([[1.0, -2.0, 30.0], [0.5, 0.2, 28.0],
                       [-1.0, 0.8, 31.0], [0.0, 0.0, 29.0]])
    tau = np.zeros(12)
    for i in range(4):
        tau[3 * i:3 * i + 3] = -jacs[i].T @ f_true[i]
    joints.tau = tau
    contact = estimate_grf(MODEL, joints)
    assert np.allclose(contact.grf_est, f_true, atol=1e-9)
    assert contact.td_detected
    assert not np.any(contact.singular)


def test_estimate_grf_no_contact_when_unloaded():
    contact = estimate_grf(MODEL, stance_joints())
    assert not np.any(contact.in_contact)
    assert not contact.td_detected


def test_estimate_grf_torque_gate():
    # a tiny residual through a stretched (ill-conditioned) leg must not
    # register as contact even if the amplified normal force looks large
    q = np.zeros(12)
    q[0::3] = 0.0
    q[2::3] = 0.02       # nearly straight knees
    joints = JointState(q=q, q_dot=np.zeros(12), tau=np.full(12, -0.1))
    contact = estimate_grf(MODEL, joints)
    assert not contact.td_detected


def test_estimate_grf_frame_rotation():
    joints = stance_joints()
    jacs = leg_jacobians(MODEL, joints.q)
    f_body = np.array([[0.0, 0.0, 30.0]] * 4)
    tau = np.zeros(12)
    for i in range(4):
        tau[3 * i:3 * i + 3] = -jacs[i].T @ f_body[i]
    joints.tau = tau
    R = rot_z(0.5)
    contact = estimate_grf(MODEL, joints, R_frame=R)
    assert np.allclose(contact.grf_est, (R @ f_body.T).T, atol=1e-9)


def test_update_velocity_leak():
    est = VelocityEstimate(v_hat=np.array([1.0, 0.0, 0.0]),
                           gamma=np.array([0.1, 0.1, 0.1]), bias=np.zeros(3))
    out = update_velocity(est, np.zeros(3), 0.002)
    assert np.isclose(out.v_hat[0], 1.0 * (1.0 - 0.1 * 0.002))
    out = update_velocity(est, np.array([0.0, 0.0, -9.81]), 0.002)
    assert out.v_hat[2] < 0


def test_update_velocity_unstable_gain():
    est = VelocityEstimate(v_hat=np.zeros(3), gamma=np.full(3, 2000.0),
                           bias=np.zeros(3))
    with pytest.raises(UnstableGain):
        update_velocity(est, np.zeros(3), 0.002)


def test_kinematic_adjustment_homing_at_zero_alpha():
    terrain = TerrainFrame(R_ct=np.eye(3), l0=0.27)
    feet, oor = kinematic_adjustment(MODEL, terrain, np.array([0.5, 0.5]), 0.0)
    expect = MODEL.homing_feet(0.27) - np.array([0.0, 0.0, 0.27])
    assert np.allclose(feet, expect)
    assert not np.any(oor)


def test_kinematic_adjustment_shift_and_reach():
    terrain = TerrainFrame(R_ct=np.eye(3), l0=0.27)
    feet, oor = kinematic_adjustment(MODEL, terrain, np.array([0.1, 0.0]), 1.0)
    expect = MODEL.homing_feet(0.27) - np.array([0.0, 0.0, 0.27])
    assert np.allclose(feet[:, 0] - expect[:, 0], 0.1)
    assert not np.any(oor)
    # an absurd shift leaves the workspace
    _, oor = kinematic_adjustment(MODEL, terrain, np.array([5.0, 0.0]), 1.0)
    assert np.any(oor)
    with pytest.raises(ValueError):
        kinematic_adjustment(MODEL, terrain, np.zeros(2), 1.5)


def test_terrain_frame_removes_yaw_only():
    R_wc = rot_z(0.7)
    terrain, R_wt = terrain_frame_from_orientation(R_wc, 0.27)
    assert np.allclose(R_wt, rot_z(0.7))
    assert np.allclose(terrain.R_ct, np.eye(3))


def test_joint_velocity_reference_direction():
    joints = stance_joints()
    err = np.tile([0.0, 0.0, -0.05], 4).reshape(4, 3)   # feet should go down
    qd = joint_velocity_reference(MODEL, joints.q, err, 10.0, 1e-3)
    jacs = leg_jacobians(MODEL, joints.q)
    for i in range(4):
        foot_vel = jacs[i] @ qd[3 * i:3 * i + 3]
        assert foot_vel[2] < 0


def test_joint_pd_clamps():
    tau, sat = joint_pd(MODEL, np.zeros(12), np.full(12, 10.0),
                        np.zeros(12), np.zeros(12), 1e3, 0.0)
    assert sat
    assert np.all(np.abs(tau) <= MODEL.tau_max)


def airborne_sensors(q=None):
    joints = stance_joints() if q is None else JointState(
        q=q, q_dot=np.zeros(12), tau=np.zeros(12))
    return Sensors(R_wc=np.eye(3), omega_body=np.zeros(3),
                   accel_body=np.zeros(3), joints=joints,
                   com_pos_world=np.array([0.0, 0.0, 0.8]),
                   com_vel_world=np.array([1.0, 0.0, -1.0]))


def test_controller_stays_flying_without_contact():
    ctrl = LandingController(MODEL, VhsipParams(), Gains())
    ctrl.reset(np.array([1.0, 0.0, 0.0]))
    for i in range(10):
        out = ctrl.tick(i * 0.002, airborne_sensors())
        assert ctrl.phase == "flying"
        assert out.diag["td"] == 0
    assert ctrl.plan is not None
    assert ctrl.plan.u_o[0] > 0        # pivot ahead of the motion


def test_controller_naive_keeps_homing_feet():
    ctrl = LandingController(MODEL, VhsipParams(), Gains(), naive=True)
    ctrl.reset(np.array([2.0, 0.0, 0.0]))
    out = ctrl.tick(0.0, airborne_sensors())
    assert out.diag["u_o_x"] == 0.0 and out.diag["u_o_y"] == 0.0


def test_controller_freezes_on_touchdown():
    ctrl = LandingController(MODEL, VhsipParams(), Gains())
    ctrl.reset(np.array([0.0, 0.0, -2.0]))
    sensors = airborne_sensors()
    ctrl.tick(0.0, sensors)
    # fabricate loaded legs: torques consistent with 30 N vertical per foot
    jacs = leg_jacobians(MODEL, sensors.joints.q)
    tau = np.zeros(12)
    for i in range(4):
        tau[3 * i:3 * i + 3] = -jacs[i].T @ np.array([0.0, 0.0, 30.0])
    loaded = airborne_sensors()
    loaded.joints.tau = tau
    for i in range(1, 5):                 # residual filter needs a few ticks
        out = ctrl.tick(i * 0.002, loaded)
        if ctrl.phase == "landed":
            break
    assert ctrl.phase == "landed"
    assert ctrl.frozen_plan is not None
    # once landed the controller stays landed and outputs finite torques
    out = ctrl.tick(0.02, loaded)
    assert ctrl.phase == "landed"
    assert np.all(np.isfinite(out.tau))
    assert np.all(np.abs(out.tau) <= MODEL.tau_max + 1e-12)
