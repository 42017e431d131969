"""Dataclass configs for the landing stack and strict YAML (de)serialization.

Every block rejects unknown keys on load, and the effective config can be
round-tripped (load -> to_dict -> load) without loss.
"""
import dataclasses
from dataclasses import dataclass, field

import numpy as np
import yaml

GRAVITY = 9.81


class ConfigError(ValueError):
    """Malformed or inconsistent configuration."""


@dataclass
class VhsipParams:
    """Template-model parameters: vertical mass-spring-damper plus the
    discretization used by the horizontal planner."""
    m: float = 12.0          # lumped mass [kg]
    k: float = 0.0           # virtual stiffness [N/m]; selected per tick, see vhsip.select_stiffness
    d: float = 0.0           # virtual damping [Ns/m]; always 2*sqrt(k*m)
    l0: float = 0.27         # spring rest height [m]
    delta_z: float = 0.10    # minimum terrain clearance [m]
    t_c: float = 1.2         # maximum settling time [s]
    Ts: float = 0.004        # planner sampling period [s]
    N: int = 0               # horizon steps; 0 -> ceil(t_c / Ts)
    g: float = GRAVITY

    def __post_init__(self):
        if self.m <= 0 or self.Ts <= 0 or self.g <= 0 or self.t_c <= 0:
            raise ConfigError("VhsipParams: m, Ts, g, t_c must be positive")
        if not (self.l0 > self.delta_z > 0):
            raise ConfigError("VhsipParams: need l0 > delta_z > 0")
        if self.N == 0:
            self.N = int(np.ceil(self.t_c / self.Ts))
        if self.N < 1:
            raise ConfigError("VhsipParams: N >= 1")
        if self.k < 0:
            raise ConfigError("VhsipParams: k >= 0")
        self.d = 2.0 * np.sqrt(self.k * self.m)

    def with_stiffness(self, k):
        """Copy with stiffness k and critically-damped d."""
        return dataclasses.replace(self, k=float(k))


# leg order used everywhere: LF, RF, LH, RH
LEG_NAMES = ("LF", "RF", "LH", "RH")
# abduction link points left (+y) on left legs, right (-y) on right legs
LEG_SIDE_SIGN = np.array([1.0, -1.0, 1.0, -1.0])
# knee bend branch: front knees backward, hind knees forward (X stance)
KNEE_SIGN = np.array([1.0, 1.0, -1.0, -1.0])


@dataclass
class RobotModel:
    """Lumped-mass quadruped: trunk rigid body plus four massless 3-DoF legs.

    Geometry defaults approximate a 12 kg desk-scale quadruped; they are
    config values, not measurements of any specific platform.
    """
    m: float = 12.0
    inertia: np.ndarray = field(default_factory=lambda: np.diag([0.10, 0.25, 0.30]))
    hip_offsets: np.ndarray = field(default_factory=lambda: np.array([
        [0.19, 0.12, 0.0],    # LF
        [0.19, -0.12, 0.0],   # RF
        [-0.19, 0.12, 0.0],   # LH
        [-0.19, -0.12, 0.0],  # RH
    ]))
    link_lengths: np.ndarray = field(default_factory=lambda: np.array([0.08, 0.213, 0.213]))
    q_min: np.ndarray = field(default_factory=lambda: np.tile([-1.0, -1.6, -2.7], 4))
    q_max: np.ndarray = field(default_factory=lambda: np.tile([1.0, 1.6, 2.7], 4))
    tau_max: np.ndarray = field(default_factory=lambda: np.tile([23.7, 23.7, 35.5], 4))
    mu: float = 0.8
    f_th_z: float = 5.0      # contact force threshold [N]
    rotor_inertia: float = 0.035   # reflected joint inertia [kg m^2]
    joint_damping: float = 0.15    # motor viscous friction [Nm s/rad]

    def __post_init__(self):
        self.inertia = np.asarray(self.inertia, dtype=float)
        self.hip_offsets = np.asarray(self.hip_offsets, dtype=float)
        self.link_lengths = np.asarray(self.link_lengths, dtype=float)
        self.q_min = np.asarray(self.q_min, dtype=float)
        self.q_max = np.asarray(self.q_max, dtype=float)
        self.tau_max = np.asarray(self.tau_max, dtype=float)
        if self.m <= 0:
            raise ConfigError("RobotModel: m > 0")
        if not np.allclose(self.inertia, self.inertia.T) or np.any(np.linalg.eigvalsh(self.inertia) <= 0):
            raise ConfigError("RobotModel: inertia must be symmetric positive definite")
        if np.any(self.link_lengths <= 0):
            raise ConfigError("RobotModel: link lengths > 0")
        if np.any(self.q_min >= self.q_max):
            raise ConfigError("RobotModel: q_min < q_max elementwise")
        if self.mu <= 0 or self.f_th_z <= 0:
            raise ConfigError("RobotModel: mu > 0 and f_th_z > 0")

    def homing_feet(self, l0):
        """Homing rectangle on the terrain plane (z = 0), terrain frame.

        Feet sit below the hips, displaced laterally by the abduction link.
        """
        feet = self.hip_offsets.copy()
        feet[:, 1] += LEG_SIDE_SIGN * self.link_lengths[0]
        feet[:, 2] = 0.0
        return feet


@dataclass
class Gains:
    """Controller gains and tunables (none are dictated by the template model)."""
    # in-flight joint PD
    kp_joint: float = 28.0
    kd_joint: float = 1.2
    # cartesian velocity reference
    k_v: float = 10.0          # [1/s]
    epsilon: float = 1e-3      # Jacobian regularization
    # foot-shift interpolation ramp
    alpha_ramp_time: float = 0.15   # [s] to reach alpha = 1
    # leaky-integrator discount factors [1/s]
    gamma: np.ndarray = field(default_factory=lambda: np.array([0.1, 0.1, 0.1]))
    # OCP weights
    w_p: float = 1.0
    w_v: float = 1.0
    w_u: float = 1e-6
    # post-TD cartesian impedance
    kp_lin: np.ndarray = field(default_factory=lambda: np.array([800.0, 800.0, 800.0]))
    kd_lin: np.ndarray = field(default_factory=lambda: 2.0 * np.sqrt(np.array([800.0, 800.0, 800.0]) * 12.0))
    kp_ang: np.ndarray = field(default_factory=lambda: np.array([60.0, 60.0, 60.0]))
    kd_ang: np.ndarray = field(default_factory=lambda: np.array([8.0, 8.0, 8.0]))
    # stance posture task: weak joint PD toward the reference-pose IK,
    # stands in for the leg inertia the massless-leg model lacks
    kp_stance: float = 15.0
    kd_stance: float = 1.5
    # GRF distribution
    f_min: float = 2.0         # [N] minimum normal force per foot

    def __post_init__(self):
        self.gamma = np.asarray(self.gamma, dtype=float)
        self.kp_lin = np.asarray(self.kp_lin, dtype=float)
        self.kd_lin = np.asarray(self.kd_lin, dtype=float)
        self.kp_ang = np.asarray(self.kp_ang, dtype=float)
        self.kd_ang = np.asarray(self.kd_ang, dtype=float)
        if np.any(self.gamma <= 0):
            raise ConfigError("Gains: gamma entries > 0")
        if self.epsilon <= 0:
            raise ConfigError("Gains: epsilon > 0")
        if self.w_p < 0 or self.w_v < 0 or self.w_u < 0 or self.w_p + self.w_u <= 0:
            raise ConfigError("Gains: weights >= 0 with w_p + w_u > 0")


@dataclass
class GroundModel:
    """Compliant penalty contact with Coulomb friction."""
    # damping is sized against the reflected foot mass (rotor inertia divided
    # by the Jacobian scale, ~0.35 kg), not the trunk: larger values turn the
    # first touch into a rigid collision that rebounds the trunk
    k_ground: float = 3e4      # normal stiffness [N/m]
    d_ground: float = 200.0    # normal damping [Ns/m]
    mu_ground: float = 0.8
    k_tangent: float = 1e4     # tangential anchor stiffness [N/m]
    d_tangent: float = 100.0   # tangential damping [Ns/m]

    def __post_init__(self):
        for name in ("k_ground", "d_ground", "mu_ground", "k_tangent", "d_tangent"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"GroundModel: {name} > 0")


@dataclass
class SimSettings:
    """Loop rates, actuator model and success-classifier thresholds."""
    control_freq: float = 500.0    # [Hz]
    plan_freq: float = 250.0       # [Hz]
    physics_dt: float = 0.001      # [s], must be <= 1 ms
    duration: float = 2.5          # [s] max sim time
    imu_accel_bias: float = 0.05   # constant accelerometer bias per axis [m/s^2]
    imu_accel_noise: float = 0.0   # white noise std [m/s^2]
    settle_joint_speed: float = 0.05   # [rad/s] standing-still threshold
    settle_hold_time: float = 0.3      # [s] continuous hold
    tip_over_angle: float = 1.0        # [rad] roll/pitch beyond this is a tip-over
    contact_break_debounce: float = 0.01  # [s] contact loss shorter than this is chatter

    def __post_init__(self):
        if self.physics_dt > 1e-3 + 1e-12:
            raise ConfigError("SimSettings: physics_dt <= 1 ms")
        if self.duration <= 0:
            raise ConfigError("SimSettings: duration > 0")
        if self.control_freq <= 0 or self.plan_freq <= 0:
            raise ConfigError("SimSettings: frequencies > 0")


@dataclass
class NoiseSpec:
    """White-noise standard deviations injected by the simulator."""
    sigma_qdot: float = 0.0    # measured joint velocity [rad/s]
    sigma_tau: float = 0.0     # measured joint torque [Nm]
    sigma_v0: float = 0.0      # initial horizontal velocity estimate [m/s]


@dataclass
class CampaignGrids:
    """Sweep grids for the three campaigns."""
    polar_heights: list = field(default_factory=lambda: [0.5, 0.8, 1.0])
    polar_nu_max: float = 4.0
    polar_nu_step: float = 0.1
    polar_psi_count: int = 12       # psi = 0 .. 2*pi step 2*pi/count
    noise_height: float = 0.80
    noise_batch: int = 10
    noise_v_max: float = 2.5
    noise_v_step: float = 0.5
    noise_sigma_qdot: float = 0.05
    noise_sigma_tau: float = 0.2
    noise_sigma_v0: float = 0.2
    angular_height: float = 0.60
    angular_vx: float = 1.0
    angular_angle_step_deg: float = 5.0
    angular_rate_step_deg: float = 5.0
    angular_angle_max_deg: float = 60.0
    angular_rate_max_deg: float = 720.0


@dataclass
class RunConfig:
    robot: RobotModel = field(default_factory=RobotModel)
    vhsip: VhsipParams = field(default_factory=VhsipParams)
    gains: Gains = field(default_factory=Gains)
    ground: GroundModel = field(default_factory=GroundModel)
    sim: SimSettings = field(default_factory=SimSettings)
    grids: CampaignGrids = field(default_factory=CampaignGrids)
    seed: int = 0
    workers: int = 1
    out_dir: str = "out"


_NESTED = {
    "robot": RobotModel, "vhsip": VhsipParams, "gains": Gains,
    "ground": GroundModel, "sim": SimSettings, "grids": CampaignGrids,
}


def _build(cls, data, path):
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a mapping")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
    try:
        return cls(**data)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def config_from_dict(data):
    if not isinstance(data, dict):
        raise ConfigError("config: expected a mapping at top level")
    names = {f.name for f in dataclasses.fields(RunConfig)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"config: unknown keys {sorted(unknown)}")
    kwargs = {}
    for key, value in data.items():
        if key in _NESTED:
            kwargs[key] = _build(_NESTED[key], value, key)
        else:
            kwargs[key] = value
    return RunConfig(**kwargs)


def _plain(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if dataclasses.is_dataclass(obj):
        return {f.name: _plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, list):
        return [_plain(v) for v in obj]
    return obj


def config_to_dict(cfg):
    return _plain(cfg)


def load_config(path):
    with open(path) as fh:
        data = yaml.safe_load(fh)
    if data is None:
        data = {}
    return config_from_dict(data)


def save_config(cfg, path):
    with open(path, "w") as fh:
        yaml.safe_dump(config_to_dict(cfg), fh, sort_keys=True)
