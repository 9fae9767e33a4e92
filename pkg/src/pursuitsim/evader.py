"""Scripted potential-field evader.

The evader moves at constant speed along the direction of the summed
repulsions: 1/d from each pursuer, 1/d from each obstacle surface
(horizontal), an inward radial 1/d from the arena boundary, and (in 3D mode)
1/d from the floor and ceiling. With zero resultant force it keeps its
previous heading.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels


@dataclass
class EvaderConfig:
    w_pursuer: float = 1.0
    w_obstacle: float = 0.5
    w_boundary: float = 0.5
    eps_dist: float = 0.05
    speed: float = 1.3
    fixed_altitude: bool = False

    def __post_init__(self):
        for name in ("w_pursuer", "w_obstacle", "w_boundary"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if not self.eps_dist > 0:
            raise ValueError("eps_dist must be > 0")


def evader_force(evader_p, pursuer_positions, obstacles, cfg, arena_radius,
                 arena_height, obstacle_radius):
    """Unnormalized repulsive force acting on the evader."""
    pursuers = np.ascontiguousarray(pursuer_positions,
                                    dtype=np.float64).reshape(-1)
    obs = np.ascontiguousarray(obstacles, dtype=np.float64).reshape(-1)
    out = np.empty(3)
    kernels.evader_force(
        np.ascontiguousarray(evader_p, dtype=np.float64), pursuers,
        len(pursuers) // 3, obs, len(obs) // 2, obstacle_radius, arena_radius,
        arena_height, cfg.w_pursuer, cfg.w_obstacle, cfg.w_boundary,
        cfg.eps_dist, 1 if cfg.fixed_altitude else 0, out)
    return out


def evader_step(evader_p, prev_heading, force, dt, cfg, arena_radius,
                arena_height):
    """Advance the evader one tick; returns (new position, new heading)."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    e = np.array(evader_p, dtype=np.float64)
    heading = np.array(prev_heading, dtype=np.float64)
    kernels.evader_step(e, heading,
                        np.ascontiguousarray(force, dtype=np.float64),
                        cfg.speed, dt, arena_radius, arena_height,
                        1 if cfg.fixed_altitude else 0)
    return e, heading
