"""Command translation: CTBR -> rotor speeds, velocity commands -> motion.

The CTBR path runs a rate-only PID per body axis whose output (desired angular
acceleration) is scaled by the inertia into torque commands and mixed with the
collective thrust through the inverse of the rotor geometry matrix. On
saturation the total thrust is preserved and the differential (torque) part is
scaled down proportionally.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .dynamics import QuadState


@dataclass
class CtbrCommand:
    """Normalized collective thrust plus commanded body rates (rad/s)."""

    F: float = 0.0
    wx: float = 0.0
    wy: float = 0.0
    wz: float = 0.0

    def clamped(self):
        pi = math.pi
        return CtbrCommand(
            F=min(max(self.F, 0.0), 1.0),
            wx=min(max(self.wx, -pi), pi),
            wy=min(max(self.wy, -pi), pi),
            wz=min(max(self.wz, -pi), pi),
        )

    def as_array(self):
        return np.array([self.F, self.wx, self.wy, self.wz])

    @classmethod
    def from_array(cls, a):
        return cls(F=float(a[0]), wx=float(a[1]), wy=float(a[2]),
                   wz=float(a[3]))


@dataclass
class RatePidConfig:
    kp: np.ndarray = field(default_factory=lambda: np.array([100.0, 100.0, 40.0]))
    ki: np.ndarray = field(default_factory=lambda: np.array([30.0, 30.0, 10.0]))
    kd: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 0.0]))
    i_limit: np.ndarray = field(default_factory=lambda: np.array([2.0, 2.0, 2.0]))
    output_scale: float = 1.0

    def __post_init__(self):
        self.kp = np.asarray(self.kp, dtype=np.float64).reshape(3).copy()
        self.ki = np.asarray(self.ki, dtype=np.float64).reshape(3).copy()
        self.kd = np.asarray(self.kd, dtype=np.float64).reshape(3).copy()
        self.i_limit = np.asarray(self.i_limit,
                                  dtype=np.float64).reshape(3).copy()
        for name in ("kp", "ki", "kd"):
            if not np.isfinite(getattr(self, name)).all():
                raise ValueError(f"{name} must be finite")
        if not np.all(self.i_limit > 0):
            raise ValueError("i_limit must be > 0")

    def flat(self):
        """13-double layout consumed by the kernels."""
        return np.concatenate([self.kp, self.ki, self.kd, self.i_limit,
                               [self.output_scale]])


@dataclass
class PidState:
    """Per-quad controller state; owned by one environment instance."""

    integ: np.ndarray = field(default_factory=lambda: np.zeros(3))
    prev_err: np.ndarray = field(default_factory=lambda: np.zeros(3))
    saturated: bool = False

    def copy(self):
        return PidState(self.integ.copy(), self.prev_err.copy(),
                        self.saturated)


def mixer_matrix(params):
    """Rows map per-rotor forces to (total thrust, tau_x, tau_y, tau_z)."""
    m = np.empty((4, 4))
    m[0, :] = 1.0
    m[1, :] = params.rotor_pos[:, 1]
    m[2, :] = -params.rotor_pos[:, 0]
    m[3, :] = params.rotor_spin * (params.k_m / params.k_f)
    return m


def mixer_inverse(params):
    return np.linalg.inv(mixer_matrix(params))


def ctbr_to_rotor_cmd(cmd, state, pid_state, params, pid_cfg, dt,
                      mix_inv=None):
    """Translate a CTBR command into four rotor-speed commands.

    Returns (rotor commands, updated PidState); saturation is silent and
    reported through the returned state's ``saturated`` flag.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if mix_inv is None:
        mix_inv = mixer_inverse(params)
    if isinstance(cmd, CtbrCommand):
        cmd = cmd.as_array()
    cmd = np.ascontiguousarray(cmd, dtype=np.float64)
    new = pid_state.copy()
    rotor = np.empty(4)
    sat = kernels.pid_mixer(cmd, np.ascontiguousarray(state.w), new.integ,
                            new.prev_err, dt, params.flat(), pid_cfg.flat(),
                            np.ascontiguousarray(mix_inv.reshape(-1)), rotor)
    new.saturated = bool(sat)
    return rotor, new


def velocity_to_motion(desired_v, state, max_speed, dt, tau_v=0.15):
    """Point-mass kinematic update used only by heuristic baselines.

    Velocity tracks ``desired_v`` through a first-order lag with time constant
    ``tau_v``, speed clamped to ``max_speed``; orientation is held identity.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    p = state.p.copy()
    v = state.v.copy()
    kernels.velocity_lag(p, v, np.ascontiguousarray(desired_v,
                                                    dtype=np.float64),
                         max_speed, tau_v, dt)
    return QuadState(p=p, v=v)
