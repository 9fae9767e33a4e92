"""Curriculum hooks parity with the native loop, plus the batch wrapper."""

import numpy as np
import pytest

import pursuitsim_bindings as pb
from pursuitsim.config import config_from_dict
from pursuitsim.curriculum import curriculum_loop, evaluate_task
from pursuitsim.pursuers import DistanceThresholdPolicy

HOOK_CONFIG = {
    "env": {"pursuer_max_speed": 5.0, "max_steps": 100},
    "curriculum": {"batch_size": 4, "eval_episodes_per_task": 4,
                   "delta": 0.05},
}
SEED = 3
ITERATIONS = 8


def _policy(app):
    return DistanceThresholdPolicy(app.env, full_dist=0.5, zero_dist=1.0)


def test_hooks_reproduce_native_archive_bit_exact():
    app = config_from_dict(HOOK_CONFIG)

    policy = _policy(app)
    native_archive, native_stats = curriculum_loop(
        policy, app.curriculum, app.env, ITERATIONS, seed=SEED,
        **app.env_kwargs())

    # external evaluation through the hooks, same evaluator derivation
    policy2 = _policy(app)
    with pb.curriculum_hooks(HOOK_CONFIG, iterations=ITERATIONS,
                             seed=SEED) as hooks:
        for batch, sink in hooks:
            it = hooks.iteration
            rates = [evaluate_task(policy2, t, app.env,
                                   app.curriculum.eval_episodes_per_task,
                                   SEED, it, s, **app.env_kwargs())
                     for s, t in enumerate(batch.tasks)]
            reeval = [evaluate_task(policy2, t, app.env,
                                    app.curriculum.eval_episodes_per_task,
                                    SEED, it, len(batch.tasks) + s,
                                    **app.env_kwargs())
                      for s, t in enumerate(batch.reeval_tasks)]
            sink.submit(rates, reeval)
        hook_archive = hooks.archive
        hook_stats = hooks.stats

    assert len(hook_archive) == len(native_archive)
    for a, b in zip(native_archive, hook_archive):
        assert a.task == b.task
        assert a.success_rate == b.success_rate
        assert a.last_eval_iteration == b.last_eval_iteration
    assert [s.as_dict() for s in native_stats] == \
        [s.as_dict() for s in hook_stats]


def test_rates_outside_unit_interval_rejected():
    with pb.curriculum_hooks(HOOK_CONFIG, iterations=1, seed=0) as hooks:
        for batch, sink in hooks:
            with pytest.raises(ValueError):
                sink.submit([1.5] * len(batch.tasks))
            sink.submit([0.6] * len(batch.tasks))


def test_missing_submission_blocks_with_diagnostic():
    hooks = pb.curriculum_hooks(HOOK_CONFIG, iterations=2, seed=0)
    it = iter(hooks)
    next(it)
    with pytest.raises(RuntimeError, match="blocked"):
        next(it)


def test_double_submission_rejected():
    with pb.curriculum_hooks(HOOK_CONFIG, iterations=1, seed=0) as hooks:
        for batch, sink in hooks:
            sink.submit([0.6] * len(batch.tasks))
            with pytest.raises(RuntimeError):
                sink.submit([0.6] * len(batch.tasks))


def test_early_termination_releases_state():
    hooks = pb.curriculum_hooks(HOOK_CONFIG, iterations=10, seed=1)
    for batch, sink in hooks:
        sink.submit([0.6] * len(batch.tasks))
        break
    hooks.close()
    assert hooks.archive is not None  # snapshot survives
    assert hooks._engine is None      # native state released


class TestBatchEnv:
    def test_64_handles_one_call(self):
        with pb.BatchEnv(64, {"env": {"max_steps": 30}}) as batch:
            obs = batch.reset_all("obstacle_free", seeds=range(64))
            assert obs.shape == (64, 3, 40)
            actions = np.zeros((64, 3, 4))
            obs, rewards, dones, infos = batch.step(actions)
            assert obs.shape == (64, 3, 40)
            assert rewards.shape == (64,)
            assert len(infos) == 64
            assert not dones.any()

    def test_done_members_must_reset(self):
        with pb.BatchEnv(2, {"env": {"max_steps": 2}}) as batch:
            batch.reset_all("obstacle_free", seeds=[0, 1])
            a = np.zeros((2, 3, 4))
            batch.step(a)
            _, _, dones, _ = batch.step(a)
            assert dones.all()
            with pytest.raises(RuntimeError, match="reset"):
                batch.step(a)
            batch.reset_at(0, "obstacle_free", seed=5)
            batch.reset_at(1, "obstacle_free", seed=6)
            batch.step(a)

    def test_matches_single_handles(self):
        cfg = {"env": {"max_steps": 20}}
        with pb.BatchEnv(3, cfg) as batch:
            obs = batch.reset_all("obstacle_free", seeds=[7, 8, 9])
            act = np.zeros((3, 3, 4))
            obs2, rewards, _, _ = batch.step(act)
        singles = []
        for seed in (7, 8, 9):
            h = pb.env_create(cfg)
            try:
                pb.env_reset(h, "obstacle_free", seed=seed)
                o, r, _, _ = pb.env_step(h, np.zeros((3, 4)))
                singles.append((o, r))
            finally:
                pb.env_close(h)
        assert np.array_equal(obs2, np.stack([s[0] for s in singles]))
        assert list(rewards) == [s[1] for s in singles]
