"""The pursuit-evasion environment: arena, detection, observations, rewards.

A cylindrical arena holds n quadrotor pursuers, one potential-field evader,
and full-height cylindrical obstacles. Detection is occlusion-only and shared
across the team; the evader's relative position is masked with a fixed marker
value while undetected. Rewards are team-based: capture bonus, mean-distance
penalty, collision penalty, and (stage two) an action-smoothness bonus.

One environment instance is single-owner; independent instances can run in
parallel freely. All stepping is deterministic for identical inputs.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .control import RatePidConfig, mixer_inverse
from .dynamics import QuadParams
from .evader import EvaderConfig
from .obs_layout import ObsLayout
from .predictor import ConstantVelocityPredictor, HistoryWindow, TickRecord


class TaskValidationError(ValueError):
    """Invalid TaskParams; ``report`` lists every violated invariant."""

    def __init__(self, report):
        super().__init__("invalid task: " + "; ".join(report))
        self.report = list(report)


class EpisodeDoneError(RuntimeError):
    """step() called on a finished episode."""


@dataclass
class EnvConfig:
    arena_radius: float = 0.9
    arena_height: float = 1.2
    n_pursuers: int = 3
    obstacle_radius: float = 0.1
    obstacle_height: float = 1.2
    n_obstacles_range: tuple = (4, 5)
    capture_radius: float = 0.3
    clearance: float = 0.07
    max_steps: int = 800
    pursuer_max_speed: float = 1.0
    evader_speed: float = 1.3
    k_nearest_obstacles: int = 3
    mask_value: float = -5.0
    gamma: float = 0.99  # consumed only by external trainers
    reward_stage: str = "one"
    prediction_horizon: int = 5
    history_length: int = 10
    dt_control: float = 0.01
    physics_substeps: int = 2

    def __post_init__(self):
        self.n_obstacles_range = tuple(self.n_obstacles_range)
        self.validate()

    def validate(self):
        problems = []
        if not self.capture_radius > self.clearance > 0:
            problems.append("require capture_radius > clearance > 0")
        if self.max_steps < 1:
            problems.append("max_steps must be >= 1")
        if self.reward_stage not in ("one", "two"):
            problems.append("reward_stage must be 'one' or 'two'")
        if self.n_pursuers < 1:
            problems.append("n_pursuers must be >= 1")
        if len(self.n_obstacles_range) != 2 or \
                self.n_obstacles_range[0] > self.n_obstacles_range[1]:
            problems.append("n_obstacles_range must be (lo, hi) with lo <= hi")
        if self.prediction_horizon < 1 or self.history_length < 1:
            problems.append("prediction_horizon and history_length must be >= 1")
        if problems:
            raise ValueError("invalid EnvConfig: " + "; ".join(problems))

    @property
    def layout(self):
        return ObsLayout(self.n_pursuers, self.k_nearest_obstacles,
                         self.prediction_horizon)


@dataclass
class TaskParams:
    """One task parameter: obstacle layout plus start positions."""

    obstacles: np.ndarray
    pursuer_starts: np.ndarray
    evader_start: np.ndarray

    def __post_init__(self):
        self.obstacles = np.asarray(self.obstacles,
                                    dtype=np.float64).reshape(-1, 2).copy()
        self.pursuer_starts = np.asarray(
            self.pursuer_starts, dtype=np.float64).reshape(-1, 3).copy()
        self.evader_start = np.asarray(self.evader_start,
                                       dtype=np.float64).reshape(3).copy()

    def validation_report(self, cfg):
        """List of violated invariants (empty when valid)."""
        problems = []
        r_in = cfg.arena_radius - cfg.clearance
        if self.pursuer_starts.shape[0] != cfg.n_pursuers:
            problems.append(
                f"expected {cfg.n_pursuers} pursuer starts, got "
                f"{self.pursuer_starts.shape[0]}")
        names = [f"pursuer {i}" for i in range(self.pursuer_starts.shape[0])]
        points = list(self.pursuer_starts) + [self.evader_start]
        names.append("evader")
        for name, p in zip(names, points):
            rr = math.hypot(p[0], p[1])
            if rr > r_in + 1e-9:
                problems.append(f"{name} outside arena radius margin "
                                f"(r={rr:.4f} > {r_in:.4f})")
            if p[2] < cfg.clearance - 1e-9 or \
                    p[2] > cfg.arena_height - cfg.clearance + 1e-9:
                problems.append(f"{name} altitude {p[2]:.4f} outside "
                                "[clearance, height-clearance]")
        n_obs = self.obstacles.shape[0]
        for j in range(n_obs):
            c = self.obstacles[j]
            if math.hypot(c[0], c[1]) > \
                    cfg.arena_radius - cfg.obstacle_radius + 1e-9:
                problems.append(f"obstacle {j} not fully inside arena")
            for jj in range(j + 1, n_obs):
                d = math.hypot(c[0] - self.obstacles[jj][0],
                               c[1] - self.obstacles[jj][1])
                if d < 2 * cfg.obstacle_radius - 1e-9:
                    problems.append(f"obstacles {j} and {jj} overlap "
                                    f"(d={d:.4f})")
        keep_out = cfg.obstacle_radius + cfg.clearance
        for name, p in zip(names, points):
            for j in range(n_obs):
                d = math.hypot(p[0] - self.obstacles[j][0],
                               p[1] - self.obstacles[j][1])
                if d < keep_out - 1e-9:
                    problems.append(f"{name} within clearance of obstacle {j} "
                                    f"(d={d:.4f} < {keep_out:.4f})")
        for i, p in enumerate(self.pursuer_starts):
            d = float(np.linalg.norm(p - self.evader_start))
            if d < cfg.capture_radius - 1e-9:
                problems.append(f"evader within capture radius of pursuer {i} "
                                f"(d={d:.4f})")
        return problems

    def validate(self, cfg):
        report = self.validation_report(cfg)
        if report:
            raise TaskValidationError(report)

    def to_dict(self):
        return {
            "obstacles": self.obstacles.tolist(),
            "pursuer_starts": self.pursuer_starts.tolist(),
            "evader_start": self.evader_start.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(obstacles=np.asarray(d["obstacles"]).reshape(-1, 2),
                   pursuer_starts=d["pursuer_starts"],
                   evader_start=d["evader_start"])

    def __eq__(self, other):
        if not isinstance(other, TaskParams):
            return NotImplemented
        return (np.array_equal(self.obstacles, other.obstacles)
                and np.array_equal(self.pursuer_starts, other.pursuer_starts)
                and np.array_equal(self.evader_start, other.evader_start))


@dataclass
class Observation:
    """Structured view of one pursuer's observation row."""

    o_self: np.ndarray
    o_other: np.ndarray
    o_ob: np.ndarray

    def as_array(self):
        return np.concatenate([self.o_self, self.o_other.reshape(-1),
                               self.o_ob.reshape(-1)])

    @classmethod
    def from_row(cls, row, layout):
        row = np.asarray(row, dtype=np.float64)
        return cls(
            o_self=row[:layout.self_dim].copy(),
            o_other=row[layout.others].reshape(-1, 3).copy(),
            o_ob=row[layout.obstacles].reshape(-1, 3).copy(),
        )


@dataclass
class RewardTerms:
    capture: float = 0.0
    distance: float = 0.0
    collision: float = 0.0
    smoothness: float = 0.0
    total: float = 0.0


@dataclass
class StepResult:
    observations: np.ndarray  # (n_pursuers, obs_dim)
    rewards: RewardTerms
    done: bool
    info: dict

    def observation(self, i, layout):
        return Observation.from_row(self.observations[i], layout)


CAPTURE_BONUS = 6.0
DISTANCE_COEFF = -0.1
COLLISION_PENALTY = -10.0
SMOOTHNESS_COEFF = 2.0


def line_of_sight(a, b, obstacles, obstacle_radius):
    """True iff no obstacle disk blocks the 2D projection of segment a-b."""
    obs = np.ascontiguousarray(obstacles, dtype=np.float64).reshape(-1)
    return bool(kernels.line_of_sight(
        np.ascontiguousarray(a, dtype=np.float64),
        np.ascontiguousarray(b, dtype=np.float64), obs, len(obs) // 2,
        obstacle_radius))


def detect_evader(pursuer_positions, evader_position, obstacles,
                  obstacle_radius):
    """Shared detection: the evader position if any pursuer has line of sight."""
    for p in np.asarray(pursuer_positions, dtype=np.float64).reshape(-1, 3):
        if line_of_sight(p, evader_position, obstacles, obstacle_radius):
            return np.asarray(evader_position, dtype=np.float64).copy()
    return None


def compute_reward(dists, n_collision_events, actions, prev_actions, stage,
                   capture_radius):
    """Team reward from this tick's geometry and actions.

    ``dists``: per-pursuer 3D distances to the evader (post-move).
    ``n_collision_events``: pursuers violating clearance this tick (obstacles,
    other pursuers, or arena walls). At the first tick (``prev_actions`` is
    None) the smoothness term uses the current action as its own predecessor.
    """
    n = len(dists)
    dmin = float(dists[0])
    dsum = 0.0
    for i in range(n):
        d = float(dists[i])
        dsum += d
        if d < dmin:
            dmin = d
    capture = CAPTURE_BONUS if dmin < capture_radius else 0.0
    distance = DISTANCE_COEFF * (dsum / n)
    collision = COLLISION_PENALTY * float(n_collision_events)
    smoothness = 0.0
    if stage == "two":
        a = np.asarray(actions, dtype=np.float64)
        pa = a if prev_actions is None else np.asarray(prev_actions,
                                                       dtype=np.float64)
        acc = 0.0
        for i in range(n):
            s2 = 0.0
            for j in range(a.shape[1]):
                diff = float(a[i, j]) - float(pa[i, j])
                s2 += diff * diff
            acc += math.exp(-math.sqrt(s2))
        smoothness = SMOOTHNESS_COEFF * (acc / n)
    total = capture + distance + collision + smoothness
    return RewardTerms(capture, distance, collision, smoothness, total)


class PursuitEnv:
    """Single pursuit-evasion episode driver.

    ``action_mode`` is "ctbr" for native (n, 4) CTBR actions through the full
    quad dynamics, or "velocity" for (n, 3) point-mass velocity commands used
    by the heuristic baselines.
    """

    def __init__(self, cfg=None, quad_params=None, pid_cfg=None,
                 evader_cfg=None, predictor=None, action_mode="ctbr",
                 tau_v=0.15):
        self.cfg = cfg if cfg is not None else EnvConfig()
        self.quad_params = quad_params if quad_params is not None \
            else QuadParams()
        self.pid_cfg = pid_cfg if pid_cfg is not None else RatePidConfig()
        self.evader_cfg = evader_cfg if evader_cfg is not None \
            else EvaderConfig(speed=self.cfg.evader_speed)
        if action_mode not in ("ctbr", "velocity"):
            raise ValueError("action_mode must be 'ctbr' or 'velocity'")
        self.action_mode = action_mode
        self.tau_v = tau_v
        self.predictor = predictor if predictor is not None \
            else ConstantVelocityPredictor(self.cfg)
        self.layout = self.cfg.layout

        self._par = self.quad_params.flat()
        self._pidp = self.pid_cfg.flat()
        self._mix_inv = np.ascontiguousarray(
            mixer_inverse(self.quad_params).reshape(-1))
        self._rotor_scratch = np.empty(4)
        self.task = None
        self.done = True

    # ------------------------------------------------------------------
    def reset(self, task, seed=0, validate=True):
        """Start an episode from ``task``; returns the initial observations.

        ``validate=False`` skips the TaskParams invariant check (used by the
        capture-radius sweep, where shared tasks are built under the base
        radius).
        """
        if validate:
            task.validate(self.cfg)
        cfg = self.cfg
        n = cfg.n_pursuers
        self.task = task
        self.seed = seed
        self.rng = np.random.default_rng(seed)

        self._obstacles = np.ascontiguousarray(task.obstacles.reshape(-1))
        self._n_obs = task.obstacles.shape[0]
        self._states = np.zeros((n, 17))
        self._states[:, 0:3] = task.pursuer_starts
        self._states[:, 3] = 1.0  # identity quaternion
        self._states[:, 13:17] = self.quad_params.hover_rotor_speed
        self._integ = np.zeros((n, 3))
        self._prev_err = np.zeros((n, 3))
        self._evader = task.evader_start.copy()
        self._heading = np.zeros(3)
        self._evader_v = np.zeros(3)
        self._force_scratch = np.empty(3)

        self._prev_actions = None
        self.step_count = 0
        self.done = False
        self.captured = False
        self.capture_step = None
        self.failed = False
        self.collisions_total = 0
        self.collision_events_metric = 0

        self._history = []
        if hasattr(self.predictor, "bind_task"):
            self.predictor.bind_task(task.obstacles)

        # geometry arrays reused every tick
        self._los = np.zeros(n, dtype=np.int64)
        self._coll = np.zeros(n, dtype=np.int64)
        self._wall = np.zeros(n, dtype=np.int64)
        self._dist = np.zeros(n)
        self._knear = np.zeros(n * cfg.k_nearest_obstacles, dtype=np.int64)

        obs, detected = self._observe()
        self._last_obs = obs
        self._last_info = {
            "step": 0, "captured": False, "capture_step": None,
            "collisions_step": 0, "collisions_total": 0,
            "collision_events_metric_total": 0, "evader_detected": detected,
            "failed": False, "evader_position": self._evader.copy(),
            "evader_velocity": self._evader_v.copy(),
            "pursuer_positions": self._states[:, 0:3].copy(),
            "prediction_fallback": self._pred_fallback,
        }
        return obs

    # ------------------------------------------------------------------
    def _observe(self):
        cfg = self.cfg
        n = cfg.n_pursuers
        pos = np.ascontiguousarray(self._states[:, 0:3].reshape(-1))
        detected = bool(kernels.world_geometry(
            pos, n, self._evader, self._obstacles, self._n_obs,
            cfg.obstacle_radius, cfg.clearance, cfg.arena_radius,
            cfg.arena_height, cfg.k_nearest_obstacles, self._los, self._coll,
            self._wall, self._dist, self._knear))

        self._history.append(TickRecord(
            tick=self.step_count, pursuers=self._states[:, 0:3].copy(),
            evader_p=self._evader.copy(), evader_v=self._evader_v.copy(),
            detected=detected))
        if len(self._history) > cfg.history_length:
            del self._history[:len(self._history) - cfg.history_length]
        window = HistoryWindow(list(self._history))
        pred, fallback = self.predictor.predict(window)
        self._pred_fallback = fallback

        obs = np.empty((n, self.layout.obs_dim))
        kernels.fill_observations(
            obs.reshape(-1), np.ascontiguousarray(self._states.reshape(-1)),
            n, self._evader, 1 if detected else 0,
            np.ascontiguousarray(np.asarray(pred).reshape(-1)),
            cfg.prediction_horizon, self._knear, cfg.k_nearest_obstacles,
            self._obstacles, cfg.mask_value)
        return obs, detected

    # ------------------------------------------------------------------
    def step(self, actions):
        """Advance one control tick; see module docstring for the order."""
        if self.done:
            raise EpisodeDoneError("episode is done; call reset()")
        cfg = self.cfg
        n = cfg.n_pursuers
        adim = 4 if self.action_mode == "ctbr" else 3
        actions = np.asarray(actions, dtype=np.float64)
        if actions.shape != (n, adim):
            raise ValueError(f"expected actions of shape {(n, adim)}, got "
                             f"{actions.shape}")
        if not np.isfinite(actions).all():
            raise ValueError("non-finite action")

        # (1) evader advances using the tick-start pursuer positions
        e_before = self._evader.copy()
        pos = np.ascontiguousarray(self._states[:, 0:3].reshape(-1))
        kernels.evader_tick(
            self._evader, self._heading, pos, n, self._obstacles, self._n_obs,
            cfg.obstacle_radius, cfg.arena_radius, cfg.arena_height,
            self.evader_cfg.w_pursuer, self.evader_cfg.w_obstacle,
            self.evader_cfg.w_boundary, self.evader_cfg.eps_dist,
            self.evader_cfg.speed, cfg.dt_control,
            1 if self.evader_cfg.fixed_altitude else 0, self._force_scratch)
        self._evader_v = (self._evader - e_before) / cfg.dt_control

        # (2) pursuers: control + dynamics, then wall clip
        mode = 0 if self.action_mode == "ctbr" else 1
        actions = np.ascontiguousarray(actions)
        clipped = [0] * n
        for i in range(n):
            finite, _sat, clip = kernels.pursuer_tick(
                self._states[i], actions[i], mode,
                cfg.dt_control, cfg.physics_substeps, self._par, self._pidp,
                self._mix_inv, self._integ[i], self._prev_err[i],
                cfg.pursuer_max_speed, self.tau_v, cfg.arena_radius,
                cfg.arena_height, self._rotor_scratch)
            clipped[i] = clip
            if not finite:
                return self._fail_step()

        # (3) detection, prediction, observations
        self.step_count += 1
        obs, detected = self._observe()

        # (4) rewards
        n_events = 0
        metric_events = 0
        for i in range(n):
            if self._coll[i]:
                metric_events += 1
            if self._coll[i] or self._wall[i] or clipped[i]:
                n_events += 1
        self.collisions_total += n_events
        self.collision_events_metric += metric_events
        rewards = compute_reward(self._dist, n_events, actions,
                                 self._prev_actions, cfg.reward_stage,
                                 cfg.capture_radius)
        self._prev_actions = actions.copy()

        # (5) termination
        if rewards.capture > 0.0:
            self.captured = True
            self.capture_step = self.step_count
            self.done = True
        elif self.step_count >= cfg.max_steps:
            self.done = True

        info = {
            "step": self.step_count,
            "captured": self.captured,
            "capture_step": self.capture_step,
            "collisions_step": n_events,
            "collisions_total": self.collisions_total,
            "collision_events_metric_total": self.collision_events_metric,
            "evader_detected": detected,
            "failed": False,
            "evader_position": self._evader.copy(),
            "evader_velocity": self._evader_v.copy(),
            "pursuer_positions": self._states[:, 0:3].copy(),
            "prediction_fallback": self._pred_fallback,
        }
        self._last_obs = obs
        self._last_info = info
        return StepResult(obs, rewards, self.done, info)

    def _fail_step(self):
        self.done = True
        self.failed = True
        info = dict(self._last_info)
        info.update(step=self.step_count + 1, failed=True, captured=False,
                    capture_step=None)
        return StepResult(self._last_obs, RewardTerms(), True, info)

    # ------------------------------------------------------------------
    @property
    def pursuer_positions(self):
        return self._states[:, 0:3].copy()

    @property
    def evader_position(self):
        return self._evader.copy()

    @property
    def states_flat(self):
        return self._states.copy()

    @property
    def last_info(self):
        return self._last_info

    @property
    def last_observations(self):
        return self._last_obs

    def history_window(self):
        return HistoryWindow(list(self._history))

    def quad_state(self, i):
        from .dynamics import QuadState
        return QuadState.from_flat(self._states[i])
