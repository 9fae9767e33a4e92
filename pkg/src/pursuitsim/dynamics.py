"""Quadrotor rigid-body dynamics.

State: position and linear velocity in the world frame, orientation as a unit
quaternion (w, x, y, z) mapping body to world, angular velocity in the body
frame, and the four rotor speeds. Rotor forces follow f_j = k_f * Omega_j^2
and reaction torques tau_j = k_m * Omega_j^2; motors respond as a first-order
system dOmega/dt = T_m * (Omega_cmd - Omega) with T_m in 1/s.

All functions are pure; integration is classic RK4 with quaternion
renormalization, with rotor speeds sampled from the exact motor response at
the substep times.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels


class NonFiniteStateError(RuntimeError):
    """Raised when integration produces NaN or infinity."""


def _vec(x, size):
    a = np.asarray(x, dtype=np.float64).reshape(size)
    return a.copy()


@dataclass
class QuadParams:
    """Physical parameters of one quadrotor (Crazyflie-2.1-class defaults)."""

    m: float = 0.027
    inertia: np.ndarray = field(
        default_factory=lambda: np.array([1.4e-5, 1.4e-5, 2.17e-5]))
    k_f: float = 2.0e-8
    k_m: float = 1.2e-10
    T_m: float = 20.0
    g: float = 9.81
    Omega_max: float = 2500.0
    rotor_pos: np.ndarray = field(default_factory=lambda: np.array([
        [0.0325, 0.0325, 0.0],
        [-0.0325, 0.0325, 0.0],
        [-0.0325, -0.0325, 0.0],
        [0.0325, -0.0325, 0.0],
    ]))
    rotor_spin: np.ndarray = field(
        default_factory=lambda: np.array([1.0, -1.0, 1.0, -1.0]))
    F_max: float | None = None

    def __post_init__(self):
        self.inertia = _vec(self.inertia, 3)
        self.rotor_pos = np.asarray(self.rotor_pos,
                                    dtype=np.float64).reshape(4, 3).copy()
        self.rotor_spin = _vec(self.rotor_spin, 4)
        if self.F_max is None:
            self.F_max = 4.0 * self.k_f * self.Omega_max ** 2
        self.validate()

    def validate(self):
        problems = []
        if not self.m > 0:
            problems.append("m must be > 0")
        if not np.all(self.inertia > 0):
            problems.append("inertia components must be > 0")
        for name in ("k_f", "k_m", "T_m"):
            if not getattr(self, name) > 0:
                problems.append(f"{name} must be > 0")
        if not np.all(np.abs(self.rotor_spin) == 1.0):
            problems.append("rotor_spin entries must be +1 or -1")
        cap = 4.0 * self.k_f * self.Omega_max ** 2
        if abs(self.F_max - cap) > 1e-9 * max(1.0, cap):
            problems.append(
                f"F_max={self.F_max} inconsistent with 4*k_f*Omega_max^2={cap}")
        if problems:
            raise ValueError("invalid QuadParams: " + "; ".join(problems))

    @property
    def hover_rotor_speed(self):
        return math.sqrt(self.m * self.g / (4.0 * self.k_f))

    @property
    def hover_thrust_fraction(self):
        return self.m * self.g / self.F_max

    def flat(self):
        """26-double layout consumed by the kernels."""
        out = np.empty(26, dtype=np.float64)
        out[0] = self.m
        out[1:4] = self.inertia
        out[4] = self.k_f
        out[5] = self.k_m
        out[6] = self.T_m
        out[7] = self.g
        out[8] = self.Omega_max
        out[9] = self.F_max
        out[10:22] = self.rotor_pos.reshape(-1)
        out[22:26] = self.rotor_spin
        return out


@dataclass
class QuadState:
    """13-dimensional rigid-body state plus the four rotor speeds."""

    p: np.ndarray = field(default_factory=lambda: np.zeros(3))
    q: np.ndarray = field(default_factory=lambda: np.array([1.0, 0, 0, 0]))
    v: np.ndarray = field(default_factory=lambda: np.zeros(3))
    w: np.ndarray = field(default_factory=lambda: np.zeros(3))
    rotor_speeds: np.ndarray = field(default_factory=lambda: np.zeros(4))

    def __post_init__(self):
        self.p = _vec(self.p, 3)
        self.q = _vec(self.q, 4)
        self.v = _vec(self.v, 3)
        self.w = _vec(self.w, 3)
        self.rotor_speeds = _vec(self.rotor_speeds, 4)

    def flat(self):
        return np.concatenate([self.p, self.q, self.v, self.w,
                               self.rotor_speeds])

    @classmethod
    def from_flat(cls, a):
        a = np.asarray(a, dtype=np.float64)
        return cls(p=a[0:3], q=a[3:7], v=a[7:10], w=a[10:13],
                   rotor_speeds=a[13:17])

    def is_finite(self):
        return bool(np.isfinite(self.flat()).all())

    def copy(self):
        return QuadState.from_flat(self.flat())


def rotation_matrix(q):
    """Body-to-world rotation matrix of a unit quaternion (w, x, y, z)."""
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def linear_acceleration(state, params):
    """World-frame acceleration: gravity plus rotated collective thrust."""
    thrust = params.k_f * float(np.dot(state.rotor_speeds, state.rotor_speeds))
    acc = rotation_matrix(state.q) @ np.array([0.0, 0.0, thrust / params.m])
    acc[2] -= params.g
    return acc


def body_torque(state, params):
    """Net body torque: rotor reaction torques plus moment-arm thrust terms."""
    f = params.k_f * state.rotor_speeds ** 2
    tau = np.zeros(3)
    tau[2] = params.k_m * float(
        np.dot(params.rotor_spin, state.rotor_speeds ** 2))
    for j in range(4):
        tau += np.cross(params.rotor_pos[j], np.array([0.0, 0.0, f[j]]))
    return tau


def angular_acceleration(state, params):
    """Euler's rotation equation with diagonal inertia, body frame."""
    inertia = params.inertia
    tau = body_torque(state, params)
    gyro = np.cross(state.w, inertia * state.w)
    return (tau - gyro) / inertia


def motor_step(rotor_speeds, cmd, dt, params):
    """Exact first-order motor response over dt, clamped to [0, Omega_max]."""
    cmd = np.clip(np.asarray(cmd, dtype=np.float64), 0.0, params.Omega_max)
    decay = math.exp(-params.T_m * dt)
    out = cmd + (np.asarray(rotor_speeds, dtype=np.float64) - cmd) * decay
    return np.clip(out, 0.0, params.Omega_max)


def integrate(state, cmd, dt, params, n_substeps=1):
    """One deterministic RK4 advance of the full quad state.

    Raises NonFiniteStateError if any component diverges; callers treat the
    episode as failed.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    flat = state.flat()
    cmd = np.ascontiguousarray(cmd, dtype=np.float64)
    ok = kernels.integrate_quad(flat, cmd, dt, n_substeps, params.flat())
    if not ok:
        raise NonFiniteStateError("quad state became non-finite")
    return QuadState.from_flat(flat)


DEFAULT_PARAMS = QuadParams()
