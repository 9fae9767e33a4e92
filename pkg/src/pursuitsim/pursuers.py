"""Pursuer policies: heuristic baselines and the shared policy interface.

All policies see the same masked observation the environment emits, plus an
info dict with own absolute positions and the team's shared detection. The
evader's true position may appear in info for logging; fair policies must
consume it only when ``evader_detected`` is set (the heuristics here do,
through a last-seen tracker).

Heuristic baselines command velocities for a point-mass quad
(``command_type == "velocity"``); native policies emit CTBR actions.
"""

import math
from dataclasses import dataclass

import numpy as np


class Policy:
    """Deterministic-under-seed mapping from observations to commands."""

    command_type = "velocity"  # or "ctbr"

    def reset(self, seed=0):
        self.rng = np.random.default_rng(seed)

    def act(self, obs, info):
        raise NotImplementedError


class LastSeenTracker:
    """Remembers the most recent detected evader position; never fabricates."""

    def __init__(self):
        self.position = None
        self.tick = None
        self.prev_position = None
        self.prev_tick = None
        self.staleness = math.inf

    def update(self, detected, position, tick):
        if detected:
            if self.position is not None:
                self.prev_position = self.position
                self.prev_tick = self.tick
            self.position = np.asarray(position, dtype=np.float64).copy()
            self.tick = tick
            self.staleness = 0
        elif self.position is not None:
            self.staleness += 1
        return self.position, self.staleness

    def velocity_estimate(self, dt):
        """Finite-difference velocity from the last two sightings."""
        if self.position is None or self.prev_position is None:
            return np.zeros(3)
        span = (self.tick - self.prev_tick) * dt
        if span <= 0:
            return np.zeros(3)
        return (self.position - self.prev_position) / span


def _unit(v, eps=1e-12):
    n = float(np.linalg.norm(v))
    return v / n if n > eps else np.zeros_like(v)


def interception_point(last_position, velocity_estimate, lookahead):
    """Lead the target by its estimated velocity times the lookahead."""
    return last_position + velocity_estimate * lookahead


class _HeuristicBase(Policy):
    """Shared plumbing: tracker update and chase targets."""

    def __init__(self, env_cfg):
        self.env_cfg = env_cfg
        self.reset(0)

    def reset(self, seed=0):
        super().reset(seed)
        self.tracker = LastSeenTracker()

    def _chase_targets(self, info):
        """Per-pursuer target point: last-known evader, else arena center."""
        cfg = self.env_cfg
        self.tracker.update(info["evader_detected"], info["evader_position"],
                            info["step"])
        if self.tracker.position is not None:
            return self.tracker.position
        return np.array([0.0, 0.0, cfg.arena_height / 2.0])

    def _obstacle_rels(self, row):
        """Unmasked nearest-obstacle relative positions from one obs row."""
        cfg = self.env_cfg
        sl = cfg.layout.obstacles
        rels = np.asarray(row[sl]).reshape(-1, 3)
        mask = cfg.mask_value
        return [r for r in rels if not (r[0] == mask and r[1] == mask)]

    def _other_rels(self, row):
        return np.asarray(row[self.env_cfg.layout.others]).reshape(-1, 3)


@dataclass
class AngelaniConfig:
    repulse_weight: float = 0.3
    repulse_radius: float = 0.3
    eps_dist: float = 0.05


class AngelaniPolicy(_HeuristicBase):
    """Greedy attraction to the last-known evader position, with short-range
    1/d repulsion from teammates and obstacles to avoid pile-ups."""

    def __init__(self, env_cfg, cfg=None):
        self.cfg = cfg if cfg is not None else AngelaniConfig()
        super().__init__(env_cfg)

    def act(self, obs, info):
        env_cfg = self.env_cfg
        c = self.cfg
        target = self._chase_targets(info)
        positions = info["pursuer_positions"]
        out = np.zeros((env_cfg.n_pursuers, 3))
        for i in range(env_cfg.n_pursuers):
            force = _unit(target - positions[i])
            for rel in self._other_rels(obs[i]):
                d = float(np.linalg.norm(rel))
                if 1e-12 < d < c.repulse_radius:
                    force = force - (c.repulse_weight / max(d, c.eps_dist)) \
                        * (rel / d)
            for rel in self._obstacle_rels(obs[i]):
                d = float(np.linalg.norm(rel[:2]))
                dsurf = d - env_cfg.obstacle_radius
                if 1e-12 < d and dsurf < c.repulse_radius:
                    away = np.array([-rel[0] / d, -rel[1] / d, 0.0])
                    force = force + (c.repulse_weight
                                     / max(dsurf, c.eps_dist)) * away
            out[i] = env_cfg.pursuer_max_speed * _unit(force)
        return out


@dataclass
class JanosovConfig:
    lookahead: float = 0.5
    inertia_alpha: float = 0.8
    noise_sigma: float = 0.0
    repulse_weight: float = 0.3
    repulse_radius: float = 0.3
    wall_margin: float = 0.15
    wall_weight: float = 1.0
    eps_dist: float = 0.05


class JanosovPolicy(_HeuristicBase):
    """Greedy chase of a predicted interception point with inertia (low-pass
    filtered commands), soft wall avoidance, teammate repulsion, and optional
    command noise."""

    def __init__(self, env_cfg, cfg=None):
        self.cfg = cfg if cfg is not None else JanosovConfig()
        super().__init__(env_cfg)

    def reset(self, seed=0):
        super().reset(seed)
        self._prev_cmd = None

    def act(self, obs, info):
        env_cfg = self.env_cfg
        c = self.cfg
        self._chase_targets(info)
        if self.tracker.position is not None:
            v_est = self.tracker.velocity_estimate(env_cfg.dt_control)
            target = interception_point(self.tracker.position, v_est,
                                        c.lookahead)
        else:
            target = np.array([0.0, 0.0, env_cfg.arena_height / 2.0])
        positions = info["pursuer_positions"]
        n = env_cfg.n_pursuers
        if self._prev_cmd is None:
            self._prev_cmd = np.zeros((n, 3))
        out = np.zeros((n, 3))
        for i in range(n):
            p = positions[i]
            force = _unit(target - p)
            # soft inward push near the cylinder wall, floor, and ceiling
            r = math.hypot(p[0], p[1])
            gap = env_cfg.arena_radius - r
            if gap < c.wall_margin and r > 1e-12:
                k = c.wall_weight * (c.wall_margin - gap) / c.wall_margin
                force = force - k * np.array([p[0] / r, p[1] / r, 0.0])
            if p[2] < c.wall_margin:
                force = force + np.array(
                    [0, 0, c.wall_weight
                     * (c.wall_margin - p[2]) / c.wall_margin])
            top_gap = env_cfg.arena_height - p[2]
            if top_gap < c.wall_margin:
                force = force - np.array(
                    [0, 0, c.wall_weight
                     * (c.wall_margin - top_gap) / c.wall_margin])
            for rel in self._other_rels(obs[i]):
                d = float(np.linalg.norm(rel))
                if 1e-12 < d < c.repulse_radius:
                    force = force - (c.repulse_weight / max(d, c.eps_dist)) \
                        * (rel / d)
            if c.noise_sigma > 0:
                force = force + c.noise_sigma * self.rng.standard_normal(3)
            raw = env_cfg.pursuer_max_speed * _unit(force)
            cmd = c.inertia_alpha * self._prev_cmd[i] \
                + (1.0 - c.inertia_alpha) * raw
            speed = float(np.linalg.norm(cmd))
            if speed > env_cfg.pursuer_max_speed:
                cmd = cmd * (env_cfg.pursuer_max_speed / speed)
            self._prev_cmd[i] = cmd
            out[i] = cmd
        return out


@dataclass
class ApfConfig:
    gain_attract: float = 1.0
    gain_repulse_obstacle: float = 0.3
    gain_inter: float = 0.3
    influence_radius: float = 0.4
    eps_dist: float = 0.05

    def __post_init__(self):
        for name in ("gain_attract", "gain_repulse_obstacle", "gain_inter"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")


class ApfPolicy(_HeuristicBase):
    """Artificial potential field: attractive + repulsive + inter-individual
    forces, every gain externally tunable (the DACOOP substrate)."""

    def __init__(self, env_cfg, cfg=None):
        self.cfg = cfg if cfg is not None else ApfConfig()
        super().__init__(env_cfg)

    def act(self, obs, info):
        env_cfg = self.env_cfg
        c = self.cfg
        target = self._chase_targets(info)
        positions = info["pursuer_positions"]
        out = np.zeros((env_cfg.n_pursuers, 3))
        for i in range(env_cfg.n_pursuers):
            total = c.gain_attract * _unit(target - positions[i])
            for rel in self._obstacle_rels(obs[i]):
                d = float(np.linalg.norm(rel[:2]))
                dsurf = d - env_cfg.obstacle_radius
                if 1e-12 < d and dsurf < c.influence_radius:
                    mag = 1.0 / max(dsurf, c.eps_dist) \
                        - 1.0 / c.influence_radius
                    away = np.array([-rel[0] / d, -rel[1] / d, 0.0])
                    total = total + c.gain_repulse_obstacle * mag * away
            for rel in self._other_rels(obs[i]):
                d = float(np.linalg.norm(rel))
                if 1e-12 < d < c.influence_radius:
                    mag = 1.0 / max(d, c.eps_dist) - 1.0 / c.influence_radius
                    total = total + c.gain_inter * mag * (-rel / d)
            out[i] = env_cfg.pursuer_max_speed * _unit(total)
        return out


class HoverPolicy(Policy):
    """Native CTBR policy holding hover thrust and zero rates."""

    command_type = "ctbr"

    def __init__(self, env_cfg, quad_params):
        self.env_cfg = env_cfg
        self.hover = quad_params.hover_thrust_fraction
        self.reset(0)

    def act(self, obs, info):
        out = np.zeros((self.env_cfg.n_pursuers, 4))
        out[:, 0] = self.hover
        return out


class DistanceThresholdPolicy(Policy):
    """Analytic test fixture for curriculum studies.

    At episode start it draws one coin: with probability
    clip((zero_dist - d0) / (zero_dist - full_dist), 0, 1), where d0 is the
    initial minimum pursuer-evader distance, the team chases the true evader
    straight-line at full speed; otherwise it flees. Success probability is
    therefore a known decreasing function of d0 (pair with a high
    pursuer_max_speed so a chase always captures).
    """

    def __init__(self, env_cfg, full_dist=0.5, zero_dist=1.0):
        self.env_cfg = env_cfg
        self.full_dist = full_dist
        self.zero_dist = zero_dist
        self.reset(0)

    def reset(self, seed=0):
        super().reset(seed)
        self._mode = None

    def success_probability(self, d0):
        span = self.zero_dist - self.full_dist
        return float(np.clip((self.zero_dist - d0) / span, 0.0, 1.0))

    def act(self, obs, info):
        positions = info["pursuer_positions"]
        evader = info["evader_position"]
        if self._mode is None:
            d0 = float(np.min(np.linalg.norm(positions - evader, axis=1)))
            p = self.success_probability(d0)
            self._mode = "chase" if self.rng.random() < p else "flee"
        sign = 1.0 if self._mode == "chase" else -1.0
        out = np.zeros((self.env_cfg.n_pursuers, 3))
        for i in range(self.env_cfg.n_pursuers):
            out[i] = sign * self.env_cfg.pursuer_max_speed \
                * _unit(evader - positions[i])
        return out


POLICY_CONFIGS = {
    "angelani": AngelaniConfig,
    "janosov": JanosovConfig,
    "apf": ApfConfig,
}


def make_policy(name, env_cfg, quad_params=None, **params):
    """Construct a policy by name with hyperparameter overrides."""
    name = name.lower()
    if name == "angelani":
        return AngelaniPolicy(env_cfg, AngelaniConfig(**params))
    if name == "janosov":
        return JanosovPolicy(env_cfg, JanosovConfig(**params))
    if name == "apf":
        return ApfPolicy(env_cfg, ApfConfig(**params))
    if name == "hover":
        from .dynamics import QuadParams
        return HoverPolicy(env_cfg, quad_params or QuadParams())
    if name == "distance_threshold":
        return DistanceThresholdPolicy(env_cfg, **params)
    raise ValueError(f"unknown policy {name!r}")
