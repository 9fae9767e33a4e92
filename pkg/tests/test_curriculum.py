"""Adaptive task generator: sampling, expansion, selection, archive dynamics."""

import numpy as np
import pytest

from pursuitsim.curriculum import (ArchiveEntry, CurriculumConfig,
                                   CurriculumEngine, curriculum_loop,
                                   episode_seed, expand, load_archive,
                                   sample_batch, sample_global, save_archive,
                                   selection, stats_to_csv, update_archive)
from pursuitsim.world import EnvConfig, TaskParams

ENV = EnvConfig()


def some_task(seed=0):
    return sample_global(ENV, np.random.default_rng(seed))


class TestSampleGlobal:
    def test_obstacle_count_in_range(self):
        rng = np.random.default_rng(0)
        counts = {sample_global(ENV, rng).obstacles.shape[0]
                  for _ in range(40)}
        assert counts == {4, 5}

    def test_all_outputs_valid(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            task = sample_global(ENV, rng)
            assert task.validation_report(ENV) == []

    def test_deterministic_under_seed(self):
        a = [sample_global(ENV, np.random.default_rng(7)) for _ in range(5)]
        b = [sample_global(ENV, np.random.default_rng(7)) for _ in range(5)]
        for x, y in zip(a, b):
            assert x == y


class TestExpand:
    def test_obstacles_bitwise_unchanged(self):
        rng = np.random.default_rng(2)
        task = some_task(3)
        for _ in range(50):
            out = expand(task, 0.15, rng, ENV)
            assert np.array_equal(out.obstacles, task.obstacles)

    def test_zero_noise_identity(self):
        rng = np.random.default_rng(3)
        task = some_task(4)
        out = expand(task, 0.0, rng, ENV)
        assert np.array_equal(out.pursuer_starts, task.pursuer_starts)
        assert np.array_equal(out.evader_start, task.evader_start)

    def test_expansions_always_valid(self):
        rng = np.random.default_rng(4)
        task = some_task(5)
        for _ in range(1000):
            out = expand(task, 0.15, rng, ENV)
            assert out.validation_report(ENV) == []

    def test_large_noise_projected_valid(self):
        rng = np.random.default_rng(5)
        task = some_task(6)
        for _ in range(200):
            out = expand(task, 0.6, rng, ENV)
            assert out.validation_report(ENV) == []


class TestSampleBatch:
    def test_empty_archive_forces_global(self):
        cfg = CurriculumConfig(p_expand=1.0, batch_size=8)
        tasks, expanded = sample_batch([], cfg, ENV,
                                       np.random.default_rng(0))
        assert len(tasks) == 8
        assert not any(expanded)

    def test_p_one_all_expansions(self):
        cfg = CurriculumConfig(p_expand=1.0, batch_size=8)
        archive = [ArchiveEntry(some_task(1), 0.7)]
        tasks, expanded = sample_batch(archive, cfg, ENV,
                                       np.random.default_rng(0))
        assert all(expanded)
        for t in tasks:
            assert np.array_equal(t.obstacles, archive[0].task.obstacles)


class TestSelection:
    def test_band_membership(self):
        cfg = CurriculumConfig()
        tasks = [some_task(i) for i in range(5)]
        rates = [0.7, 0.95, 0.5, 0.9, 0.3]
        kept = selection(list(zip(tasks, rates)), cfg, iteration=4)
        assert [e.success_rate for e in kept] == [0.7, 0.5, 0.9]
        assert all(e.last_eval_iteration == 4 for e in kept)

    def test_rejects_invalid_rate(self):
        cfg = CurriculumConfig()
        with pytest.raises(ValueError):
            selection([(some_task(0), 1.2)], cfg)


class TestUpdateArchive:
    def test_fifo_eviction(self):
        cfg = CurriculumConfig(archive_cap=100)
        archive = []
        entries = [ArchiveEntry(some_task(0), 0.6, i) for i in range(150)]
        for e in entries:
            update_archive(archive, [e], cfg)
        assert len(archive) == 100
        assert archive[0] is entries[50]
        assert archive[-1] is entries[-1]


class TestEngine:
    def make_engine(self, **kw):
        cfg = CurriculumConfig(batch_size=4, eval_episodes_per_task=2,
                               **kw)
        return CurriculumEngine(cfg, ENV, seed=0)

    def test_propose_submit_cycle(self):
        eng = self.make_engine()
        batch = eng.propose()
        stats = eng.submit([0.6, 0.2, 0.8, 1.0])
        assert stats.n_selected == 2
        assert len(eng.archive) == 2
        assert stats.archive_size == 2

    def test_propose_twice_rejected(self):
        eng = self.make_engine()
        eng.propose()
        with pytest.raises(RuntimeError):
            eng.propose()

    def test_submit_without_propose_rejected(self):
        eng = self.make_engine()
        with pytest.raises(RuntimeError):
            eng.submit([])

    def test_wrong_rate_count_rejected(self):
        eng = self.make_engine()
        eng.propose()
        with pytest.raises(ValueError):
            eng.submit([0.5])

    def test_reevaluation_drops_out_of_band(self):
        eng = self.make_engine(reeval_age=1)
        eng.propose()
        eng.submit([0.6, 0.6, 0.6, 0.6])
        assert len(eng.archive) == 4
        batch = eng.propose()
        assert len(batch.reeval_indices) == 0  # age 1 not reached yet
        eng.submit([0.0] * 4)
        batch = eng.propose()
        assert len(batch.reeval_indices) == 4
        eng.submit([0.0] * 4, [0.95, 0.6, 0.2, 0.7])
        rates = [e.success_rate for e in eng.archive]
        assert 0.95 not in rates and 0.2 not in rates
        assert 0.6 in rates and 0.7 in rates


def distance_rate(task):
    """Deterministic stand-in success rate, decreasing in start distance."""
    d = np.min(np.linalg.norm(task.pursuer_starts - task.evader_start,
                              axis=1))
    return float(np.clip((1.0 - d) / 0.5, 0.0, 1.0))


class TestLoop:
    def test_always_fail_policy_archive_empty(self):
        cfg = CurriculumConfig(batch_size=4)
        archive, stats = curriculum_loop(
            None, cfg, ENV, iterations=5, seed=0,
            evaluator=lambda task, it, slot: 0.0)
        assert archive == []
        assert all(s.archive_size == 0 for s in stats)

    def test_band_invariant_on_insertion(self):
        cfg = CurriculumConfig(batch_size=8)
        inserted = []

        def ev(task, it, slot):
            r = distance_rate(task)
            return r

        archive, stats = curriculum_loop(None, cfg, ENV, iterations=30,
                                         seed=1, evaluator=ev)
        for e in archive:
            assert cfg.sigma_min <= e.success_rate <= cfg.sigma_max

    def test_bit_exact_reproducibility(self):
        cfg = CurriculumConfig(batch_size=6)
        runs = []
        for _ in range(2):
            archive, stats = curriculum_loop(
                None, cfg, ENV, iterations=12, seed=3,
                evaluator=lambda task, it, slot: distance_rate(task))
            runs.append((archive, stats))
        a, b = runs
        assert len(a[0]) == len(b[0])
        for x, y in zip(a[0], b[0]):
            assert x.task == y.task
            assert x.success_rate == y.success_rate
        assert [s.as_dict() for s in a[1]] == [s.as_dict() for s in b[1]]


class TestPersistence:
    def test_archive_round_trip(self, tmp_path):
        archive = [ArchiveEntry(some_task(i), 0.5 + 0.05 * i, i)
                   for i in range(5)]
        path = tmp_path / "archive.json"
        save_archive(archive, path, iteration=9)
        back, iteration = load_archive(path)
        assert iteration == 9
        assert len(back) == 5
        for a, b in zip(archive, back):
            assert a.task == b.task
            assert a.success_rate == b.success_rate

    def test_stats_csv(self, tmp_path):
        cfg = CurriculumConfig(batch_size=4)
        _, stats = curriculum_loop(
            None, cfg, ENV, iterations=3, seed=0,
            evaluator=lambda task, it, slot: 0.6)
        path = tmp_path / "stats.csv"
        stats_to_csv(stats, path)
        lines = path.read_text().strip().splitlines()
        assert len(lines) == 4
        assert lines[0].startswith("iteration,")


class TestEpisodeSeed:
    def test_deterministic_and_distinct(self):
        assert episode_seed(1, 2, 3, 4) == episode_seed(1, 2, 3, 4)
        seeds = {episode_seed(0, i, j, k)
                 for i in range(3) for j in range(3) for k in range(3)}
        assert len(seeds) == 27
