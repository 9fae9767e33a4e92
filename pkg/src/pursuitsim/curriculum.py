"""Adaptive task generation: active archive, local expansion, global
exploration, success-band selection.

Each iteration samples a task batch (expansion of archived seeds with
probability p, otherwise uniform draws over the whole task space), evaluates
the policy on it, keeps tasks whose success rate falls inside
[sigma_min, sigma_max], and appends them to a FIFO-capped archive. Archived
entries older than ``reeval_age`` iterations are re-evaluated and dropped if
they left the band. Policy improvement is external: the engine exposes every
evaluated batch so a trainer can update the policy between iterations.
"""

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .world import TaskParams


class InfeasibleConfigError(RuntimeError):
    """Rejection sampling could not place a valid task (arena too crowded)."""


@dataclass
class CurriculumConfig:
    p_expand: float = 0.7
    sigma_min: float = 0.5
    sigma_max: float = 0.9
    delta: float = 0.15
    batch_size: int = 16
    archive_cap: int = 512
    eval_episodes_per_task: int = 10
    reeval_age: int = 10

    def __post_init__(self):
        if not 0.0 <= self.sigma_min <= self.sigma_max <= 1.0:
            raise ValueError("require 0 <= sigma_min <= sigma_max <= 1")
        if not 0.0 <= self.p_expand <= 1.0:
            raise ValueError("p_expand must be in [0, 1]")
        if not self.delta > 0:
            raise ValueError("delta must be > 0")


@dataclass
class ArchiveEntry:
    task: TaskParams
    success_rate: float
    last_eval_iteration: int = 0


# ---------------------------------------------------------------------------
# task sampling
# ---------------------------------------------------------------------------

def _sample_point(rng, env_cfg):
    """Uniform position inside the arena with clearance margin."""
    r = (env_cfg.arena_radius - env_cfg.clearance) * math.sqrt(rng.random())
    theta = 2.0 * math.pi * rng.random()
    z = env_cfg.clearance + rng.random() * (env_cfg.arena_height
                                            - 2 * env_cfg.clearance)
    return np.array([r * math.cos(theta), r * math.sin(theta), z])


def sample_global(env_cfg, rng, max_rejections=1000):
    """Uniform draw over the whole task space by rejection sampling."""
    lo, hi = env_cfg.n_obstacles_range
    keep_out = env_cfg.obstacle_radius + env_cfg.clearance
    rejections = 0
    while True:
        n_obs = int(rng.integers(lo, hi + 1))
        obstacles = np.empty((n_obs, 2))
        ok = True
        for j in range(n_obs):
            placed = False
            for _ in range(200):
                r = (env_cfg.arena_radius - env_cfg.obstacle_radius) \
                    * math.sqrt(rng.random())
                theta = 2.0 * math.pi * rng.random()
                c = np.array([r * math.cos(theta), r * math.sin(theta)])
                if all(np.linalg.norm(c - obstacles[t])
                       >= 2 * env_cfg.obstacle_radius for t in range(j)):
                    obstacles[j] = c
                    placed = True
                    break
                rejections += 1
            if not placed:
                ok = False
                break

        starts = np.empty((env_cfg.n_pursuers, 3))
        evader = None
        if ok:
            for i in range(env_cfg.n_pursuers):
                placed = False
                for _ in range(200):
                    p = _sample_point(rng, env_cfg)
                    if any(math.hypot(p[0] - o[0], p[1] - o[1]) < keep_out
                           for o in obstacles):
                        rejections += 1
                        continue
                    if any(np.linalg.norm(p - starts[t])
                           < 2 * env_cfg.clearance for t in range(i)):
                        rejections += 1
                        continue
                    starts[i] = p
                    placed = True
                    break
                if not placed:
                    ok = False
                    break
        if ok:
            for _ in range(200):
                p = _sample_point(rng, env_cfg)
                if any(math.hypot(p[0] - o[0], p[1] - o[1]) < keep_out
                       for o in obstacles):
                    rejections += 1
                    continue
                if any(np.linalg.norm(p - s) < env_cfg.capture_radius
                       for s in starts):
                    rejections += 1
                    continue
                evader = p
                break
            if evader is None:
                ok = False

        if ok:
            task = TaskParams(obstacles=obstacles, pursuer_starts=starts,
                              evader_start=evader)
            task.validate(env_cfg)
            return task
        if rejections > max_rejections:
            raise InfeasibleConfigError(
                f"no valid task after {rejections} rejections; "
                "arena configuration is too crowded")


def _project_valid(points, evader_idx, obstacles, env_cfg, max_passes=50):
    """Push perturbed start positions back into validity, in place.

    Returns True when a fixed point satisfying all constraints is reached.
    """
    keep_out = env_cfg.obstacle_radius + env_cfg.clearance
    r_in = env_cfg.arena_radius - env_cfg.clearance
    tol = 1e-10
    for _ in range(max_passes):
        moved = False
        for p in points:
            r = math.hypot(p[0], p[1])
            if r > r_in + tol:
                k = r_in / r
                p[0] *= k
                p[1] *= k
                moved = True
            p[2] = min(max(p[2], env_cfg.clearance),
                       env_cfg.arena_height - env_cfg.clearance)
            for o in obstacles:
                dx = p[0] - o[0]
                dy = p[1] - o[1]
                d = math.hypot(dx, dy)
                if d < keep_out - tol:
                    if d < 1e-9:
                        dx, dy, d = 1.0, 0.0, 1.0
                    p[0] = o[0] + dx / d * keep_out
                    p[1] = o[1] + dy / d * keep_out
                    moved = True
        evader = points[evader_idx]
        for i, p in enumerate(points):
            if i == evader_idx:
                continue
            diff = p - evader
            d = float(np.linalg.norm(diff))
            if d < env_cfg.capture_radius - tol:
                if d < 1e-9:
                    diff = np.array([1.0, 0.0, 0.0])
                    d = 1.0
                p[:] = evader + diff / d * env_cfg.capture_radius
                moved = True
        if not moved:
            return True
    return False


def expand(task, delta, rng, env_cfg, max_resamples=20):
    """Perturb start positions by uniform noise in [-delta, delta], obstacles
    bitwise unchanged; resample a few times, then project to validity."""
    n = task.pursuer_starts.shape[0]

    def perturb():
        starts = task.pursuer_starts + rng.uniform(-delta, delta, size=(n, 3))
        evader = task.evader_start + rng.uniform(-delta, delta, size=3)
        return TaskParams(obstacles=task.obstacles, pursuer_starts=starts,
                          evader_start=evader)

    for _ in range(max_resamples):
        candidate = perturb()
        if not candidate.validation_report(env_cfg):
            return candidate
    # cyclic projection; obstacle keep-outs near the rim can deadlock it, in
    # which case fresh noise is drawn and projected again
    for _ in range(40):
        candidate = perturb()
        points = list(candidate.pursuer_starts) + [candidate.evader_start]
        if _project_valid(points, len(points) - 1, task.obstacles, env_cfg):
            projected = TaskParams(obstacles=task.obstacles,
                                   pursuer_starts=np.stack(points[:-1]),
                                   evader_start=points[-1])
            if not projected.validation_report(env_cfg):
                return projected
    raise RuntimeError("could not expand task to a valid neighbor")


def sample_batch(archive, cfg, env_cfg, rng):
    """One iteration's task batch; returns (tasks, expanded flags)."""
    tasks = []
    expanded = []
    for _ in range(cfg.batch_size):
        if archive and rng.random() < cfg.p_expand:
            seed_entry = archive[int(rng.integers(len(archive)))]
            tasks.append(expand(seed_entry.task, cfg.delta, rng, env_cfg))
            expanded.append(True)
        else:
            tasks.append(sample_global(env_cfg, rng))
            expanded.append(False)
    return tasks, expanded


# ---------------------------------------------------------------------------
# archive maintenance
# ---------------------------------------------------------------------------

def selection(evaluated, cfg, iteration=0):
    """Keep tasks whose success rate lies in [sigma_min, sigma_max]."""
    kept = []
    for task, rate in evaluated:
        if not 0.0 <= rate <= 1.0:
            raise ValueError(f"success rate {rate} outside [0, 1]")
        if cfg.sigma_min <= rate <= cfg.sigma_max:
            kept.append(ArchiveEntry(task, float(rate), iteration))
    return kept


def update_archive(archive, new_entries, cfg):
    """Append, then FIFO-evict the oldest entries beyond the cap."""
    archive.extend(new_entries)
    if len(archive) > cfg.archive_cap:
        del archive[:len(archive) - cfg.archive_cap]
    return archive


# ---------------------------------------------------------------------------
# iteration engine (shared by the native loop and the bindings hooks)
# ---------------------------------------------------------------------------

def episode_seed(root_seed, iteration, slot, episode):
    """Stable per-episode seed derivation."""
    ss = np.random.SeedSequence((int(root_seed), int(iteration), int(slot),
                                 int(episode)))
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass
class IterationStats:
    iteration: int
    archive_size: int
    mean_success: float
    expansion_fraction: float
    n_selected: int
    n_reevaluated: int
    n_dropped: int

    def as_dict(self):
        return dict(self.__dict__)


@dataclass
class ProposedBatch:
    tasks: list
    expanded: list
    reeval_indices: list = field(default_factory=list)
    reeval_tasks: list = field(default_factory=list)


class CurriculumEngine:
    """Archive bookkeeping with externally supplied success rates.

    ``propose()`` hands out this iteration's batch (plus stale archive entries
    due for re-evaluation); ``submit()`` takes their success rates and updates
    the archive. The native loop and the foreign-function hooks both drive
    this engine, so their archive evolution is identical under equal seeds and
    evaluations.
    """

    def __init__(self, cfg, env_cfg, seed=0):
        self.cfg = cfg
        self.env_cfg = env_cfg
        self.seed = int(seed)
        self.rng = np.random.default_rng(np.random.SeedSequence(self.seed))
        self.archive = []
        self.iteration = 0
        self.stats = []
        self._pending = None

    def propose(self):
        if self._pending is not None:
            raise RuntimeError(
                "previous batch not submitted; call submit() first")
        tasks, expanded = sample_batch(self.archive, self.cfg, self.env_cfg,
                                       self.rng)
        reeval_indices = [
            i for i, e in enumerate(self.archive)
            if self.iteration - e.last_eval_iteration > self.cfg.reeval_age
        ]
        batch = ProposedBatch(
            tasks=tasks, expanded=expanded, reeval_indices=reeval_indices,
            reeval_tasks=[self.archive[i].task for i in reeval_indices])
        self._pending = batch
        return batch

    def submit(self, success_rates, reeval_rates=()):
        if self._pending is None:
            raise RuntimeError("no proposed batch; call propose() first")
        batch = self._pending
        if len(success_rates) != len(batch.tasks):
            raise ValueError(
                f"expected {len(batch.tasks)} success rates, got "
                f"{len(success_rates)}")
        if len(reeval_rates) != len(batch.reeval_indices):
            raise ValueError(
                f"expected {len(batch.reeval_indices)} re-evaluation rates, "
                f"got {len(reeval_rates)}")
        for rate in list(success_rates) + list(reeval_rates):
            if not 0.0 <= rate <= 1.0:
                raise ValueError(f"success rate {rate} outside [0, 1]")
        # validation is complete; the iteration can now commit
        self._pending = None

        evaluated = list(zip(batch.tasks, success_rates))
        kept = selection(evaluated, self.cfg, self.iteration)

        dropped = 0
        for idx, rate in sorted(zip(batch.reeval_indices, reeval_rates),
                                reverse=True):
            entry = self.archive[idx]
            entry.success_rate = float(rate)
            entry.last_eval_iteration = self.iteration
            if not self.cfg.sigma_min <= rate <= self.cfg.sigma_max:
                del self.archive[idx]
                dropped += 1

        update_archive(self.archive, kept, self.cfg)
        stats = IterationStats(
            iteration=self.iteration,
            archive_size=len(self.archive),
            mean_success=float(np.mean(success_rates))
            if len(success_rates) else 0.0,
            expansion_fraction=float(np.mean(batch.expanded))
            if batch.expanded else 0.0,
            n_selected=len(kept),
            n_reevaluated=len(batch.reeval_indices),
            n_dropped=dropped,
        )
        self.stats.append(stats)
        self.iteration += 1
        return stats


def evaluate_task(policy, task, env_cfg, episodes, root_seed, iteration, slot,
                  **env_kwargs):
    """Success rate of ``policy`` on ``task`` over independent episodes.

    Success means capture before max_steps; policy failures (exceptions or
    non-finite actions) count as failed episodes.
    """
    from .harness import make_env, run_episode
    env = make_env(env_cfg, policy, **env_kwargs)
    wins = 0
    for ep in range(episodes):
        seed = episode_seed(root_seed, iteration, slot, ep)
        result = run_episode(env, policy, task, seed)
        wins += 1 if result.captured else 0
    return wins / episodes


def curriculum_loop(policy, cfg, env_cfg, iterations, seed=0,
                    evaluator=None, on_iteration=None, **env_kwargs):
    """Run the generator loop for a fixed iteration budget.

    With a frozen policy this is a pure curriculum-dynamics study; an external
    trainer can update the policy between iterations through ``on_iteration``,
    which receives (iteration, tasks, success_rates).
    """
    engine = CurriculumEngine(cfg, env_cfg, seed)
    if evaluator is None:
        def evaluator(task, iteration, slot):
            return evaluate_task(policy, task, env_cfg,
                                 cfg.eval_episodes_per_task, seed, iteration,
                                 slot, **env_kwargs)

    for _ in range(iterations):
        batch = engine.propose()
        rates = [evaluator(t, engine.iteration, s)
                 for s, t in enumerate(batch.tasks)]
        reeval = [evaluator(t, engine.iteration, len(batch.tasks) + s)
                  for s, t in enumerate(batch.reeval_tasks)]
        engine.submit(rates, reeval)
        if on_iteration is not None:
            on_iteration(engine.iteration - 1, batch.tasks, rates)
    return engine.archive, engine.stats


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

def save_archive(archive, path, iteration=0):
    doc = {
        "schema_version": 1,
        "kind": "pursuitsim-archive",
        "iteration": iteration,
        "entries": [
            {"task": e.task.to_dict(), "success_rate": e.success_rate,
             "last_eval_iteration": e.last_eval_iteration}
            for e in archive
        ],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)


def load_archive(path):
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("kind") != "pursuitsim-archive":
        raise ValueError(f"{path}: not an archive checkpoint")
    entries = [
        ArchiveEntry(TaskParams.from_dict(e["task"]),
                     float(e["success_rate"]),
                     int(e["last_eval_iteration"]))
        for e in doc["entries"]
    ]
    return entries, int(doc.get("iteration", 0))


def stats_to_csv(stats, path):
    fields = ["iteration", "archive_size", "mean_success",
              "expansion_fraction", "n_selected", "n_reevaluated", "n_dropped"]
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for s in stats:
            writer.writerow(s.as_dict())
