"""Reactive landing controller: per-tick re-planning while airborne, touch-down
detection from joint torques, and hand-off to wrench control on the frozen plan.

All planning happens in the terrain frame: a gravity-aligned frame whose x-axis
is coplanar with the trunk x-axis and gravity, placed l0 below the CoM while
airborne. This removes the need for absolute position estimation before touch
down; afterwards the frame is frozen and the tracked references live in it.
"""
from dataclasses import dataclass, field

import numpy as np

from .config import Gains, RobotModel, VhsipParams
from .legs import feet_positions, leg_jacobians, legs_ik
from .ocp import LandingPlan, plan_landing
from .qp import ActiveSetSolver
from .rotations import euler_rate_map, euler_zyx_to_rot, rot_to_euler_zyx, rot_z
from . import wbc


class UnstableGain(ValueError):
    pass


@dataclass
class TerrainFrame:
    """R_ct maps terrain-frame vectors into the CoM frame; the CoM sits l0
    above the terrain origin while airborne."""
    R_ct: np.ndarray
    l0: float


@dataclass
class JointState:
    q: np.ndarray
    q_dot: np.ndarray
    tau: np.ndarray


@dataclass
class ContactState:
    grf_est: np.ndarray          # (4, 3) terrain frame
    in_contact: np.ndarray       # (4,) bool
    td_detected: bool
    singular: np.ndarray         # (4,) bool, Jacobian near-singular flags


@dataclass
class VelocityEstimate:
    v_hat: np.ndarray            # (3,) world frame
    gamma: np.ndarray            # (3,) discount factors [1/s]
    bias: np.ndarray             # (3,) accelerometer bias estimate, body frame

    def __post_init__(self):
        if np.any(self.gamma <= 0):
            raise ValueError("gamma entries must be > 0")


@dataclass
class Sensors:
    """Per-tick measurements handed to the controller."""
    R_wc: np.ndarray             # trunk orientation (IMU)
    omega_body: np.ndarray       # gyro [rad/s]
    accel_body: np.ndarray       # accelerometer specific force [m/s^2]
    joints: JointState
    # ground-truth state source, used only after touch down
    com_pos_world: np.ndarray = None
    com_vel_world: np.ndarray = None


@dataclass
class TickOutput:
    tau: np.ndarray
    diag: dict


def terrain_frame_from_orientation(R_wc, l0):
    """Yaw-aligned horizontal frame: R_wt = Rz(yaw(R_wc))."""
    yaw = np.arctan2(R_wc[1, 0], R_wc[0, 0])
    R_wt = rot_z(yaw)
    return TerrainFrame(R_ct=R_wc.T @ R_wt, l0=l0), R_wt


def estimate_grf(model: RobotModel, joints: JointState, R_frame=None,
                 gravity_coriolis=None, torque_residual=None, cond_limit=1e4,
                 min_torque=0.5):
    """Foot-force estimate f_i = J_i^-T (h_i - tau_i) per leg (h = Coriolis +
    gravity torques, zero for massless legs). Near-singular legs are flagged
    and treated as out of contact. A precomputed disturbance torque can be
    passed as torque_residual (= h - tau), e.g. after filtering. Contact also
    requires a residual of at least min_torque [Nm] on the leg, so that a
    poorly conditioned Jacobian near full extension cannot turn noise-level
    torques into an apparent ground force."""
    jacs = leg_jacobians(model, joints.q)
    if torque_residual is None:
        h = np.zeros(12) if gravity_coriolis is None else gravity_coriolis
        torque_residual = h - joints.tau
    grf = np.zeros((4, 3))
    singular = np.zeros(4, dtype=bool)
    in_contact = np.zeros(4, dtype=bool)
    for i in range(4):
        J = jacs[i]
        if np.linalg.cond(J) > cond_limit:
            singular[i] = True
            continue
        res = torque_residual[3 * i:3 * i + 3]
        f_body = np.linalg.solve(J.T, res)
        f = f_body if R_frame is None else R_frame @ f_body
        grf[i] = f
        in_contact[i] = f[2] >= model.f_th_z and np.linalg.norm(res) >= min_torque
    return ContactState(grf_est=grf, in_contact=in_contact,
                        td_detected=bool(np.all(in_contact)), singular=singular)


def update_velocity(estimate: VelocityEstimate, accel_world, Ts):
    """Leaky integrator v <- (I - Gamma*Ts) v + Ts*a; flying phase only."""
    if np.any(estimate.gamma * Ts >= 2.0):
        raise UnstableGain("gamma * Ts must stay below 2")
    v = (1.0 - estimate.gamma * Ts) * estimate.v_hat + Ts * np.asarray(accel_world, dtype=float)
    return VelocityEstimate(v_hat=v, gamma=estimate.gamma, bias=estimate.bias)


def kinematic_adjustment(model: RobotModel, terrain: TerrainFrame, u_o, alpha):
    """Foot targets: homing rectangle shifted by alpha*u_o on the terrain
    plane, expressed in the CoM frame. Returns (feet_com (4,3), out_of_reach)."""
    if not (0.0 <= alpha <= 1.0):
        raise ValueError("alpha must lie in [0, 1]")
    feet_t = model.homing_feet(terrain.l0)
    feet_t = feet_t.copy()
    feet_t[:, 0] += alpha * u_o[0]
    feet_t[:, 1] += alpha * u_o[1]
    offset = np.array([0.0, 0.0, terrain.l0])
    feet_c = (terrain.R_ct @ (feet_t - offset).T).T
    # reach check: IK round-trips exactly only inside the workspace
    _, reachable = legs_ik(model, feet_c)
    return feet_c, ~reachable


def joint_velocity_reference(model: RobotModel, q, cartesian_error, k_v, epsilon):
    """Per-leg qdot_d = (J + eps*I)^-1 * k_v * e."""
    if epsilon <= 0:
        raise ValueError("epsilon must be > 0")
    jacs = leg_jacobians(model, q)
    qd = np.zeros(12)
    eye = epsilon * np.eye(3)
    for i in range(4):
        qd[3 * i:3 * i + 3] = np.linalg.solve(jacs[i] + eye, k_v * cartesian_error[i])
    return qd


def joint_pd(model: RobotModel, q_d, q, q_dot_d, q_dot, kp, kd, tau_g=None):
    """Joint-space PD with gravity feed-forward, clamped to the torque limits."""
    tau = kp * (q_d - q) + kd * (q_dot_d - q_dot)
    if tau_g is not None:
        tau = tau + tau_g
    clipped = np.clip(tau, -model.tau_max, model.tau_max)
    return clipped, bool(np.any(clipped != tau))


FLYING, LANDED = "flying", "landed"

DIAG_COLUMNS = (
    ["t", "phase", "alpha", "u_o_x", "u_o_y", "td"]
    + [f"com_ref_{a}" for a in "xyz"] + [f"com_act_{a}" for a in "xyz"]
    + [f"contact_{i}" for i in range(4)]
    + ["saturated", "out_of_reach", "slip_cmd"]
)


class LandingController:
    """Finite-state reactive controller (flying -> landed).

    While airborne it re-estimates the CoM velocity, re-plans the pivot
    location and shifts the feet; on the first detected touch down the last
    plan and terrain frame are frozen and tracked with the wrench controller.
    The naive variant plans as if the horizontal velocity were zero, so its
    feet never leave the homing rectangle.
    """

    def __init__(self, model: RobotModel, params: VhsipParams, gains: Gains,
                 control_dt=0.002, plan_every=2, naive=False):
        self.model = model
        self.params = params
        self.gains = gains
        self.control_dt = control_dt
        self.plan_every = max(int(plan_every), 1)
        self.naive = naive
        self.qp_solver = ActiveSetSolver()
        self.reset(np.zeros(3))

    def reset(self, v0_estimate, bias_estimate=None):
        self.phase = FLYING
        self.estimate = VelocityEstimate(
            v_hat=np.asarray(v0_estimate, dtype=float).copy(),
            gamma=self.gains.gamma.copy(),
            bias=np.zeros(3) if bias_estimate is None else np.asarray(bias_estimate, float))
        self.tick_count = 0
        self.flight_time = 0.0
        self.alpha = 0.0
        self.plan: LandingPlan = None
        self.frozen_plan: LandingPlan = None
        self.frozen_terrain: TerrainFrame = None
        self._R_wt_frozen = None
        self._origin_w = None
        self._td_time = None
        self._prev_qdot = None
        self._res_filt = np.zeros(12)
        self.qp_solver = ActiveSetSolver()

    # -- flying phase helpers -------------------------------------------------

    def _plan_now(self, R_wc, omega_body):
        R_wt = rot_z(np.arctan2(R_wc[1, 0], R_wc[0, 0]))
        v_t = R_wt.T @ self.estimate.v_hat
        c_dot_td = np.array([v_t[0], v_t[1], min(v_t[2], 0.0)])
        if self.naive:
            c_dot_td[0] = 0.0
            c_dot_td[1] = 0.0
        # terrain-relative attitude: yaw removed by construction
        R_tc = R_wt.T @ R_wc
        euler = rot_to_euler_zyx(R_tc)
        omega_t = R_tc @ omega_body
        try:
            euler_rate = np.linalg.solve(euler_rate_map(euler), omega_t)
        except np.linalg.LinAlgError:
            euler_rate = omega_t
        weights = (self.gains.w_p, self.gains.w_v, self.gains.w_u)
        self.plan = plan_landing(self.params, c_dot_td, euler, euler_rate, weights)
        if self.naive:
            self.plan.u_o[:] = 0.0

    def _flying_tick(self, sensors: Sensors, diag):
        g = self.gains
        accel_world = sensors.R_wc @ (sensors.accel_body - self.estimate.bias) \
            - np.array([0.0, 0.0, self.params.g])
        self.estimate = update_velocity(self.estimate, accel_world, self.control_dt)

        if self.plan is None or self.tick_count % self.plan_every == 0:
            self._plan_now(sensors.R_wc, sensors.omega_body)

        self.flight_time += self.control_dt
        if g.alpha_ramp_time <= 0:
            self.alpha = 1.0
        else:
            self.alpha = min(1.0, self.flight_time / g.alpha_ramp_time)

        terrain, _ = terrain_frame_from_orientation(sensors.R_wc, self.params.l0)
        u_eff = np.zeros(2) if self.naive else self.plan.u_o
        feet_c, out_of_reach = kinematic_adjustment(self.model, terrain, u_eff, self.alpha)
        q_d, _ = legs_ik(self.model, feet_c)
        # keep commanded joints off the hard stops: an endstop hit reads as a
        # contact force in the torque-residual estimate
        q_d = np.clip(q_d, self.model.q_min + 0.05, self.model.q_max - 0.05)
        feet_now = feet_positions(self.model, sensors.joints.q)
        qd_d = joint_velocity_reference(self.model, sensors.joints.q,
                                        feet_c - feet_now, g.k_v, g.epsilon)
        tau, saturated = joint_pd(self.model, q_d, sensors.joints.q,
                                  qd_d, sensors.joints.q_dot, g.kp_joint, g.kd_joint)
        diag["alpha"] = self.alpha
        diag["u_o_x"], diag["u_o_y"] = float(u_eff[0]), float(u_eff[1])
        diag["out_of_reach"] = int(np.any(out_of_reach))
        diag["saturated"] = int(saturated)
        return tau

    # -- landed phase ---------------------------------------------------------

    def _freeze(self, t, sensors: Sensors):
        self.phase = LANDED
        self._td_time = t
        if self.plan is None:
            self._plan_now(sensors.R_wc, sensors.omega_body)
        self.frozen_plan = self.plan
        self.frozen_terrain, self._R_wt_frozen = \
            terrain_frame_from_orientation(sensors.R_wc, self.params.l0)
        # terrain origin sits l0 below the CoM at the TD instant
        self._origin_w = sensors.com_pos_world - np.array([0.0, 0.0, self.params.l0])

    def _plan_sample(self, t):
        """Linear interpolation of the frozen plan at time t since TD."""
        plan = self.frozen_plan
        s = (t - self._td_time) / self.params.Ts
        i = int(np.floor(s))
        if i >= len(plan.t) - 1:
            i, frac = len(plan.t) - 2, 1.0
        else:
            i, frac = max(i, 0), min(max(s - np.floor(s), 0.0), 1.0)
        def lerp(a):
            return a[i] + frac * (a[i + 1] - a[i])
        return (lerp(plan.com_pos), lerp(plan.com_vel), lerp(plan.com_acc),
                lerp(plan.euler), lerp(plan.euler_rate), i)

    def _landed_tick(self, t, sensors: Sensors, diag):
        g = self.gains
        R_wt = self._R_wt_frozen
        com_pos_t = R_wt.T @ (sensors.com_pos_world - self._origin_w)
        com_vel_t = R_wt.T @ sensors.com_vel_world
        R_tc = R_wt.T @ sensors.R_wc
        omega_t = R_tc @ sensors.omega_body

        pos_d, vel_d, acc_d, euler_d, euler_rate_d, idx = self._plan_sample(t)
        R_ref = euler_zyx_to_rot(euler_d)
        omega_d = euler_rate_map(euler_d) @ euler_rate_d
        # finite-difference reference angular acceleration over one plan step
        plan = self.frozen_plan
        j = min(idx + 1, len(plan.t) - 1)
        om_i = euler_rate_map(plan.euler[idx]) @ plan.euler_rate[idx]
        om_j = euler_rate_map(plan.euler[j]) @ plan.euler_rate[j]
        omega_dot_d = (om_j - om_i) / self.params.Ts if j > idx else np.zeros(3)

        w = wbc.feedback_wrench(pos_d, com_pos_t, vel_d, com_vel_t,
                                R_ref, R_tc, omega_d, omega_t,
                                g.kp_lin, g.kd_lin, g.kp_ang, g.kd_ang)
        w = w + wbc.gravity_wrench(self.model, self.params.g)
        w = w + wbc.feedforward_wrench(self.model, acc_d, omega_dot_d, R_tc)

        feet_c = feet_positions(self.model, sensors.joints.q)
        feet_t = (R_tc @ feet_c.T).T
        grasp = wbc.grasp_matrix(feet_t)
        forces, sol = wbc.distribute_forces(grasp, w, self.model.mu,
                                            f_min=g.f_min, solver=self.qp_solver)
        jacs = leg_jacobians(self.model, sensors.joints.q)
        forces_body = (R_tc.T @ forces.T).T
        tau_f = np.zeros(12)
        for i in range(4):
            tau_f[3 * i:3 * i + 3] = -jacs[i].T @ forces_body[i]
        # posture task: hold the joints near the reference-pose IK so the
        # impact impulse through the rotor inertia cannot fling the legs
        feet_t_hold = self.model.homing_feet(0.0)
        feet_t_hold[:, 0] += self.frozen_plan.u_o[0] * self.alpha
        feet_t_hold[:, 1] += self.frozen_plan.u_o[1] * self.alpha
        feet_c_ref = (euler_zyx_to_rot(euler_d).T @ (feet_t_hold - pos_d).T).T
        q_ref, _ = legs_ik(self.model, feet_c_ref)
        tau_p = g.kp_stance * (q_ref - sensors.joints.q) \
            - g.kd_stance * sensors.joints.q_dot
        tau = np.clip(tau_f + tau_p, -self.model.tau_max, self.model.tau_max)
        saturated = bool(np.any(tau != tau_f + tau_p))

        diag["com_ref_x"], diag["com_ref_y"], diag["com_ref_z"] = pos_d
        diag["com_act_x"], diag["com_act_y"], diag["com_act_z"] = com_pos_t
        diag["u_o_x"], diag["u_o_y"] = self.frozen_plan.u_o
        diag["alpha"] = self.alpha
        diag["saturated"] = int(saturated)
        diag["slip_cmd"] = int(sol.status != "solved")
        diag["forces_cmd"] = forces
        return tau

    # -- public entry ---------------------------------------------------------

    def tick(self, t, sensors: Sensors) -> TickOutput:
        diag = {c: 0.0 for c in DIAG_COLUMNS}
        diag["t"] = t
        if self.phase == FLYING:
            # motion torque the actuator model explains (reflected rotor
            # inertia + viscous friction); the GRF estimate sees only the
            # residual, so swing-phase PD torques do not look like contact
            qdd = np.zeros(12) if self._prev_qdot is None else \
                (sensors.joints.q_dot - self._prev_qdot) / self.control_dt
            self._prev_qdot = sensors.joints.q_dot.copy()
            h = self.model.rotor_inertia * qdd \
                + self.model.joint_damping * sensors.joints.q_dot
            # low-pass the disturbance torque itself: the raw residual is
            # near zero in flight regardless of swing aggressiveness, and
            # measurement noise averages out without delaying real contact
            self._res_filt += 0.5 * (h - sensors.joints.tau - self._res_filt)
            contact = estimate_grf(self.model, sensors.joints,
                                   R_frame=sensors.R_wc,
                                   torque_residual=self._res_filt)
            diag.update({f"contact_{i}": int(contact.in_contact[i]) for i in range(4)})
            if contact.td_detected:
                self._freeze(t, sensors)
                diag["td"] = 1
        if self.phase == FLYING:
            diag["phase"] = 0
            tau = self._flying_tick(sensors, diag)
        else:
            diag["phase"] = 1
            tau = self._landed_tick(t, sensors, diag)
        self.tick_count += 1
        return TickOutput(tau=tau, diag=diag)
