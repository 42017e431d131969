"""Drop-test simulator: single rigid trunk, massless legs with reflected rotor
inertia at the joints, compliant penalty ground with Coulomb friction.

Physics runs at physics_dt (<= 1 ms), the controller at control_freq. Forces
from the feet act on the trunk and load the joints through the leg Jacobians;
the legs themselves carry no mass, so joint dynamics reduce to the reflected
motor inertia plus viscous friction.
"""
import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .config import GroundModel, NoiseSpec, RunConfig, SimSettings
from .controller import LandingController, JointState, Sensors
from .legs import _fk_leg, _jac_leg, legs_ik
from .rotations import euler_zyx_to_rot


@dataclass
class DropScenario:
    height: float = 0.8        # initial CoM height [m]
    vx: float = 0.0
    vy: float = 0.0
    vz: float = 0.0            # additional initial vertical velocity (<= 0 falls faster)
    roll: float = 0.0
    pitch: float = 0.0
    yaw: float = 0.0
    roll_rate: float = 0.0     # body-frame initial angular velocity [rad/s]
    pitch_rate: float = 0.0
    yaw_rate: float = 0.0
    noise: NoiseSpec = None
    seed: int = 0

    @classmethod
    def from_polar(cls, height, nu, psi, **kw):
        """Speed nu along heading psi (0 = forward, pi/2 = left)."""
        return cls(height=height, vx=nu * math.cos(psi), vy=nu * math.sin(psi), **kw)

    def validate(self, l0):
        if self.height <= l0:
            raise ValueError(f"drop height {self.height} must exceed leg length {l0}")


@dataclass
class DropOutcome:
    success: bool
    failure_mode: str          # "" on success
    td_time: float             # first all-feet contact (ground truth), nan if never
    td_detect_time: float      # controller detection, nan if never
    settle_time: float         # nan if never settled
    min_height: float          # min CoM height after first contact
    max_tilt: float            # max tilt angle after TD [rad]
    slip_time: float           # cumulative sliding-contact time after TD [s]
    n_breaks: int              # debounced contact-loss events after TD
    u_o: np.ndarray            # frozen pivot offset, (2,)
    log: list = field(default_factory=list)


@njit(cache=True)
def _substeps(n_sub, dt, p, v, R, om, q, qd, tau, anchors, contact,
              m, inertia_diag, hips, links, I_rot, b_j, q_min, q_max,
              kg, dg, mu_g, kt, dtg, g, feet_forces, accel_out):
    """Advance the physics n_sub steps with held joint torques.

    Mutates p, v, R, om, q, qd, anchors, contact, feet_forces, accel_out in
    place. Returns (slip_steps, ok): the number of foot-substeps spent sliding
    and a finite-state flag.
    """
    l1, l2, l3 = links[0], links[1], links[2]
    Ix, Iy, Iz = inertia_diag[0], inertia_diag[1], inertia_diag[2]
    slip_steps = 0
    J = np.zeros((3, 3))
    for _ in range(n_sub):
        F = np.zeros(3)
        T_body = np.zeros(3)
        for i in range(4):
            s = 1.0 if (i % 2 == 0) else -1.0
            q1, q2, q3 = q[3 * i], q[3 * i + 1], q[3 * i + 2]
            px, py, pz = _fk_leg(q1, q2, q3, l1, l2, l3, s)
            # foot in the CoM frame and world frame
            fx_c = hips[i, 0] + px
            fy_c = hips[i, 1] + py
            fz_c = hips[i, 2] + pz
            pw0 = p[0] + R[0, 0] * fx_c + R[0, 1] * fy_c + R[0, 2] * fz_c
            pw1 = p[1] + R[1, 0] * fx_c + R[1, 1] * fy_c + R[1, 2] * fz_c
            pw2 = p[2] + R[2, 0] * fx_c + R[2, 1] * fy_c + R[2, 2] * fz_c
            f0 = 0.0
            f1 = 0.0
            f2 = 0.0
            if pw2 < 0.0:
                _jac_leg(q1, q2, q3, l1, l2, l3, s, J)
                # foot velocity: trunk + rotation + joint motion, world frame
                vx_c = om[1] * fz_c - om[2] * fy_c \
                    + J[0, 0] * qd[3 * i] + J[0, 1] * qd[3 * i + 1] + J[0, 2] * qd[3 * i + 2]
                vy_c = om[2] * fx_c - om[0] * fz_c \
                    + J[1, 0] * qd[3 * i] + J[1, 1] * qd[3 * i + 1] + J[1, 2] * qd[3 * i + 2]
                vz_c = om[0] * fy_c - om[1] * fx_c \
                    + J[2, 0] * qd[3 * i] + J[2, 1] * qd[3 * i + 1] + J[2, 2] * qd[3 * i + 2]
                vw0 = v[0] + R[0, 0] * vx_c + R[0, 1] * vy_c + R[0, 2] * vz_c
                vw1 = v[1] + R[1, 0] * vx_c + R[1, 1] * vy_c + R[1, 2] * vz_c
                vw2 = v[2] + R[2, 0] * vx_c + R[2, 1] * vy_c + R[2, 2] * vz_c
                fn = -kg * pw2 - dg * vw2
                if fn < 0.0:
                    fn = 0.0
                if contact[i] == 0:
                    anchors[i, 0] = pw0
                    anchors[i, 1] = pw1
                    contact[i] = 1
                ft0 = -kt * (pw0 - anchors[i, 0]) - dtg * vw0
                ft1 = -kt * (pw1 - anchors[i, 1]) - dtg * vw1
                ft_norm = math.sqrt(ft0 * ft0 + ft1 * ft1)
                ft_max = mu_g * fn
                if ft_norm > ft_max and ft_norm > 1e-12:
                    scale = ft_max / ft_norm
                    ft0 *= scale
                    ft1 *= scale
                    # anchor slides so the spring sustains the clamped force
                    anchors[i, 0] = pw0 + (ft0 + dtg * vw0) / kt
                    anchors[i, 1] = pw1 + (ft1 + dtg * vw1) / kt
                    slip_steps += 1
                f0, f1, f2 = ft0, ft1, fn
            else:
                contact[i] = 0
            feet_forces[i, 0] = f0
            feet_forces[i, 1] = f1
            feet_forces[i, 2] = f2
            F[0] += f0
            F[1] += f1
            F[2] += f2
            # force in the body frame: torque about the CoM and joint loading
            fb0 = R[0, 0] * f0 + R[1, 0] * f1 + R[2, 0] * f2
            fb1 = R[0, 1] * f0 + R[1, 1] * f1 + R[2, 1] * f2
            fb2 = R[0, 2] * f0 + R[1, 2] * f1 + R[2, 2] * f2
            T_body[0] += fy_c * fb2 - fz_c * fb1
            T_body[1] += fz_c * fb0 - fx_c * fb2
            T_body[2] += fx_c * fb1 - fy_c * fb0
            if f2 != 0.0 or f0 != 0.0 or f1 != 0.0:
                _jac_leg(q1, q2, q3, l1, l2, l3, s, J)
                for a in range(3):
                    load = J[0, a] * fb0 + J[1, a] * fb1 + J[2, a] * fb2
                    qd[3 * i + a] += dt * (tau[3 * i + a] - b_j * qd[3 * i + a] + load) / I_rot
            else:
                for a in range(3):
                    qd[3 * i + a] += dt * (tau[3 * i + a] - b_j * qd[3 * i + a]) / I_rot

        # trunk, semi-implicit Euler
        accel_out[0] = F[0] / m
        accel_out[1] = F[1] / m
        accel_out[2] = F[2] / m - g
        v[0] += dt * accel_out[0]
        v[1] += dt * accel_out[1]
        v[2] += dt * accel_out[2]
        p[0] += dt * v[0]
        p[1] += dt * v[1]
        p[2] += dt * v[2]
        om[0] += dt * (T_body[0] - (om[1] * Iz * om[2] - om[2] * Iy * om[1])) / Ix
        om[1] += dt * (T_body[1] - (om[2] * Ix * om[0] - om[0] * Iz * om[2])) / Iy
        om[2] += dt * (T_body[2] - (om[0] * Iy * om[1] - om[1] * Ix * om[0])) / Iz
        # R <- R exp([om dt])
        w0, w1, w2 = om[0] * dt, om[1] * dt, om[2] * dt
        th = math.sqrt(w0 * w0 + w1 * w1 + w2 * w2)
        if th > 1e-12:
            a_, b_ = math.sin(th) / th, (1.0 - math.cos(th)) / (th * th)
        else:
            a_, b_ = 1.0, 0.5
        E00 = 1.0 + b_ * (-w1 * w1 - w2 * w2)
        E01 = -a_ * w2 + b_ * w0 * w1
        E02 = a_ * w1 + b_ * w0 * w2
        E10 = a_ * w2 + b_ * w0 * w1
        E11 = 1.0 + b_ * (-w0 * w0 - w2 * w2)
        E12 = -a_ * w0 + b_ * w1 * w2
        E20 = -a_ * w1 + b_ * w0 * w2
        E21 = a_ * w0 + b_ * w1 * w2
        E22 = 1.0 + b_ * (-w0 * w0 - w1 * w1)
        for r in range(3):
            r0, r1, r2 = R[r, 0], R[r, 1], R[r, 2]
            R[r, 0] = r0 * E00 + r1 * E10 + r2 * E20
            R[r, 1] = r0 * E01 + r1 * E11 + r2 * E21
            R[r, 2] = r0 * E02 + r1 * E12 + r2 * E22

        # joint integration and hard limits
        for j in range(12):
            q[j] += dt * qd[j]
            if q[j] < q_min[j]:
                q[j] = q_min[j]
                if qd[j] < 0.0:
                    qd[j] = 0.0
            elif q[j] > q_max[j]:
                q[j] = q_max[j]
                if qd[j] > 0.0:
                    qd[j] = 0.0

        if not (np.isfinite(p[2]) and np.isfinite(v[2]) and abs(v[2]) < 100.0):
            return slip_steps, False
    return slip_steps, True


def run_drop(cfg: RunConfig, scenario: DropScenario, naive=False,
             noise: NoiseSpec = None, collect_log=False):
    """Simulate one drop under the reactive (or naive) controller."""
    model, vp, gains = cfg.robot, cfg.vhsip, cfg.gains
    ground, sim = cfg.ground, cfg.sim
    noise = noise or scenario.noise or NoiseSpec()
    scenario.validate(vp.l0)
    rng = np.random.default_rng(np.random.SeedSequence(scenario.seed))

    control_dt = 1.0 / sim.control_freq
    n_sub = max(int(round(control_dt / sim.physics_dt)), 1)
    dt = control_dt / n_sub
    plan_every = max(int(round(sim.control_freq / sim.plan_freq)), 1)
    n_ticks = int(round(sim.duration / control_dt))

    # initial state: homing posture, level terrain below
    p = np.array([0.0, 0.0, scenario.height])
    v = np.array([scenario.vx, scenario.vy, min(scenario.vz, 0.0)])
    R = euler_zyx_to_rot(np.array([scenario.roll, scenario.pitch, scenario.yaw]))
    om = np.array([scenario.roll_rate, scenario.pitch_rate, scenario.yaw_rate])
    q, _ = legs_ik(model, model.homing_feet(vp.l0) - np.array([0.0, 0.0, vp.l0]))
    qd = np.zeros(12)
    anchors = np.zeros((4, 2))
    contact = np.zeros(4, dtype=np.int64)
    feet_forces = np.zeros((4, 3))
    accel = np.array([0.0, 0.0, -vp.g])
    tau = np.zeros(12)

    ctrl = LandingController(model, vp, gains, control_dt=control_dt,
                             plan_every=plan_every, naive=naive)
    v0_est = v.copy()
    v0_est[0] += rng.normal(0.0, noise.sigma_v0) if noise.sigma_v0 > 0 else 0.0
    v0_est[1] += rng.normal(0.0, noise.sigma_v0) if noise.sigma_v0 > 0 else 0.0
    ctrl.reset(v0_est)
    accel_bias = np.full(3, sim.imu_accel_bias)

    td_time = math.nan
    td_detect_time = math.nan
    settle_time = math.nan
    min_height = math.inf
    max_tilt = 0.0
    slip_time = 0.0
    slip_after_settle = False
    n_breaks = 0
    airborne_time = 0.0
    rebounded = False
    off_time = np.zeros(4)
    break_latched = np.zeros(4, dtype=bool)
    seen_contact = np.zeros(4, dtype=bool)
    settle_hold = 0.0
    failure = ""
    log = []

    for tick in range(n_ticks):
        t = tick * control_dt
        # sensing
        spec_force = R.T @ (accel + np.array([0.0, 0.0, vp.g])) + accel_bias
        if sim.imu_accel_noise > 0:
            spec_force = spec_force + rng.normal(0.0, sim.imu_accel_noise, 3)
        qd_meas = qd + (rng.normal(0.0, noise.sigma_qdot, 12) if noise.sigma_qdot > 0 else 0.0)
        tau_meas = tau + (rng.normal(0.0, noise.sigma_tau, 12) if noise.sigma_tau > 0 else 0.0)
        sensors = Sensors(R_wc=R.copy(), omega_body=om.copy(), accel_body=spec_force,
                          joints=JointState(q=q.copy(), q_dot=qd_meas, tau=tau_meas),
                          com_pos_world=p.copy(), com_vel_world=v.copy())
        out = ctrl.tick(t, sensors)
        tau = out.tau
        if out.diag.get("td") and math.isnan(td_detect_time):
            td_detect_time = t

        slip_steps, ok = _substeps(
            n_sub, dt, p, v, R, om, q, qd, tau, anchors, contact,
            model.m, np.diag(model.inertia).copy(), model.hip_offsets,
            model.link_lengths, model.rotor_inertia, model.joint_damping,
            model.q_min, model.q_max, ground.k_ground, ground.d_ground,
            ground.mu_ground, ground.k_tangent, ground.d_tangent, vp.g,
            feet_forces, accel)
        if not ok:
            failure = "blowup"
            break

        t_end = t + control_dt
        all_contact = bool(np.all(contact == 1))
        if math.isnan(td_time) and all_contact:
            td_time = t_end
        touched = bool(np.any(seen_contact))
        seen_contact |= contact == 1

        if collect_log:
            row = dict(out.diag)
            row.update(t=t, com_x=p[0], com_y=p[1], com_z=p[2],
                       vx=v[0], vy=v[1], vz=v[2],
                       tilt=float(np.arccos(np.clip(R[2, 2], -1.0, 1.0))),
                       fz_sum=float(feet_forces[:, 2].sum()))
            fc = row.pop("forces_cmd", None)
            if isinstance(fc, np.ndarray):
                # worst violation of the commanded forces against the
                # linearized cone (negative = strictly inside)
                viol = np.maximum(np.abs(fc[:, 0]) - model.mu * fc[:, 2],
                                  np.abs(fc[:, 1]) - model.mu * fc[:, 2])
                viol = np.maximum(viol, gains.f_min - fc[:, 2])
                row["cone_viol"] = float(np.max(viol))
            else:
                row["cone_viol"] = 0.0
            log.append(row)

        if not math.isnan(td_time):
            slip_time += slip_steps * dt
            min_height = min(min_height, p[2])
            tilt = float(np.arccos(np.clip(R[2, 2], -1.0, 1.0)))
            max_tilt = max(max_tilt, tilt)
            if tilt > sim.tip_over_angle:
                failure = "tip_over"
                break
            if p[2] < vp.delta_z:
                failure = "trunk_hit"
                break
            # debounced contact-loss events: chatter shorter than the debounce
            # window is tolerated, anything longer counts as a break
            for i in range(4):
                if contact[i] == 0 and seen_contact[i]:
                    off_time[i] += control_dt
                    if off_time[i] > sim.contact_break_debounce and not break_latched[i]:
                        n_breaks += 1
                        break_latched[i] = True
                else:
                    off_time[i] = 0.0
                    break_latched[i] = False
            if np.all(contact == 0):
                airborne_time += control_dt
                if airborne_time > sim.contact_break_debounce:
                    rebounded = True
            else:
                airborne_time = 0.0
            # settling detector; sliding contacts during the hold window break
            # the friction requirement even if the joints are quiet
            if all_contact and np.max(np.abs(qd)) < sim.settle_joint_speed \
                    and np.linalg.norm(v) < 0.1:
                if settle_hold > 0.0 and slip_steps > 0:
                    slip_after_settle = True
                settle_hold += control_dt
                if settle_hold >= sim.settle_hold_time:
                    settle_time = t_end
                    break
            else:
                settle_hold = 0.0
        elif touched and not math.isnan(td_detect_time):
            # partial contact then total loss would show up as no TD at all
            pass

    u_o = ctrl.frozen_plan.u_o.copy() if ctrl.frozen_plan is not None else np.zeros(2)
    if not failure:
        if math.isnan(td_time):
            failure = "no_touchdown"
        elif math.isnan(settle_time):
            failure = "no_settle"
        elif rebounded or n_breaks > 0:
            failure = "bounce"
        elif slip_after_settle:
            failure = "slip"
    success = failure == ""
    return DropOutcome(success=success, failure_mode=failure, td_time=td_time,
                       td_detect_time=td_detect_time, settle_time=settle_time,
                       min_height=float(min_height if math.isfinite(min_height) else math.nan),
                       max_tilt=max_tilt, slip_time=slip_time, n_breaks=n_breaks,
                       u_o=u_o, log=log)
