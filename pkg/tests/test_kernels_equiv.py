"""Compiled and pure-Python kernels must agree bit-for-bit."""

import numpy as np
import pytest

from pursuitsim import kernels
from pursuitsim.dynamics import QuadParams
from pursuitsim.control import RatePidConfig, mixer_inverse

compiled = pytest.importorskip("pursuitsim._kernels")
fallback = kernels.get_backend("python")

PAR = QuadParams().flat()
PIDP = RatePidConfig().flat()
MIX = np.ascontiguousarray(mixer_inverse(QuadParams()).reshape(-1))


def random_state(rng):
    s = np.concatenate([rng.normal(0, 0.4, 3), rng.normal(0, 1, 4),
                        rng.normal(0, 0.6, 3), rng.normal(0, 3, 3),
                        rng.uniform(0, 2500, 4)])
    s[3:7] /= np.linalg.norm(s[3:7])
    return s


def test_integrate_quad_bitwise():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        s = random_state(rng)
        cmd = rng.uniform(-100, 2600, 4)
        a, b = s.copy(), s.copy()
        ra = compiled.integrate_quad(a, cmd, 0.005, 2, PAR)
        rb = fallback.integrate_quad(b, cmd, 0.005, 2, PAR)
        assert ra == rb
        assert np.array_equal(a, b)


def test_pid_mixer_bitwise():
    rng = np.random.default_rng(1)
    for _ in range(1000):
        ctbr = np.array([rng.uniform(-0.2, 1.2), *rng.uniform(-4, 4, 3)])
        w = rng.normal(0, 3, 3)
        i1, i2 = rng.normal(0, 1, 3), None
        i2 = i1.copy()
        p1 = rng.normal(0, 1, 3)
        p2 = p1.copy()
        r1, r2 = np.empty(4), np.empty(4)
        s1 = compiled.pid_mixer(ctbr, w, i1, p1, 0.01, PAR, PIDP, MIX, r1)
        s2 = fallback.pid_mixer(ctbr, w, i2, p2, 0.01, PAR, PIDP, MIX, r2)
        assert s1 == s2
        assert np.array_equal(r1, r2)
        assert np.array_equal(i1, i2)
        assert np.array_equal(p1, p2)


def test_velocity_lag_bitwise():
    rng = np.random.default_rng(2)
    for _ in range(1000):
        p1 = rng.normal(0, 0.5, 3)
        v1 = rng.normal(0, 0.5, 3)
        p2, v2 = p1.copy(), v1.copy()
        vd = rng.normal(0, 2, 3)
        compiled.velocity_lag(p1, v1, vd, 1.0, 0.15, 0.01)
        fallback.velocity_lag(p2, v2, vd, 1.0, 0.15, 0.01)
        assert np.array_equal(p1, p2)
        assert np.array_equal(v1, v2)


def test_evader_kernels_bitwise():
    rng = np.random.default_rng(3)
    for _ in range(1000):
        e1 = np.append(rng.uniform(-0.8, 0.8, 2), rng.uniform(0, 1.2))
        e2 = e1.copy()
        h1 = rng.normal(0, 1, 3)
        h2 = h1.copy()
        n = int(rng.integers(0, 4))
        m = int(rng.integers(0, 6))
        pursuers = rng.uniform(-0.8, 0.8, 3 * n)
        obstacles = rng.uniform(-0.7, 0.7, 2 * m)
        f1, f2 = np.empty(3), np.empty(3)
        c1 = compiled.evader_tick(e1, h1, pursuers, n, obstacles, m, 0.1,
                                  0.9, 1.2, 1.0, 0.5, 0.5, 0.05, 1.3, 0.01,
                                  0, f1)
        c2 = fallback.evader_tick(e2, h2, pursuers, n, obstacles, m, 0.1,
                                  0.9, 1.2, 1.0, 0.5, 0.5, 0.05, 1.3, 0.01,
                                  0, f2)
        assert c1 == c2
        assert np.array_equal(e1, e2)
        assert np.array_equal(h1, h2)
        assert np.array_equal(f1, f2)


def test_geometry_bitwise():
    rng = np.random.default_rng(4)
    k = 3
    for _ in range(500):
        n = 3
        m = int(rng.integers(0, 6))
        pos = rng.uniform(-0.8, 0.8, 3 * n)
        e = rng.uniform(-0.8, 0.8, 3)
        obstacles = rng.uniform(-0.7, 0.7, 2 * m)
        outs = []
        for impl in (compiled, fallback):
            los = np.zeros(n, dtype=np.int64)
            coll = np.zeros(n, dtype=np.int64)
            wall = np.zeros(n, dtype=np.int64)
            dist = np.zeros(n)
            knear = np.zeros(n * k, dtype=np.int64)
            det = impl.world_geometry(pos, n, e, obstacles, m, 0.1, 0.07,
                                      0.9, 1.2, k, los, coll, wall, dist,
                                      knear)
            outs.append((det, los, coll, wall, dist, knear))
        a, b = outs
        assert a[0] == b[0]
        for x, y in zip(a[1:], b[1:]):
            assert np.array_equal(x, y)


def test_fill_observations_bitwise():
    rng = np.random.default_rng(5)
    n, k, horizon = 3, 3, 5
    dim = 10 + 3 * horizon + 3 * (n - 1) + 3 * k
    for _ in range(300):
        states = rng.normal(0, 0.5, 17 * n)
        e = rng.uniform(-0.8, 0.8, 3)
        pred = rng.uniform(-0.8, 0.8, 3 * horizon)
        m = int(rng.integers(1, 6))
        obstacles = rng.uniform(-0.7, 0.7, 2 * m)
        knear = rng.integers(-1, m, n * k).astype(np.int64)
        detected = int(rng.integers(0, 2))
        o1 = np.zeros(n * dim)
        o2 = np.zeros(n * dim)
        compiled.fill_observations(o1, states, n, e, detected, pred, horizon,
                                   knear, k, obstacles, -5.0)
        fallback.fill_observations(o2, states, n, e, detected, pred, horizon,
                                   knear, k, obstacles, -5.0)
        assert np.array_equal(o1, o2)


def test_full_episode_bitwise_across_backends():
    """A complete CTBR episode is bit-identical under either backend."""
    import pursuitsim as ps

    cfg = ps.EnvConfig(max_steps=120)
    task = ps.build_scenario("uniform", 11, cfg)
    traces = []
    for backend in ("compiled", "python"):
        kernels.use_backend(backend)
        try:
            env = ps.PursuitEnv(cfg)
            policy = ps.make_policy("hover", cfg)
            obs = env.reset(task, seed=5)
            policy.reset(5)
            rows = [obs.copy()]
            rewards = []
            while not env.done:
                r = env.step(policy.act(obs, env.last_info))
                obs = r.observations
                rows.append(obs.copy())
                rewards.append((r.rewards.capture, r.rewards.distance,
                                r.rewards.collision, r.rewards.total))
            traces.append((np.stack(rows), rewards))
        finally:
            kernels.use_backend("compiled")
    assert np.array_equal(traces[0][0], traces[1][0])
    assert traces[0][1] == traces[1][1]


def test_velocity_episode_bitwise_across_backends():
    import pursuitsim as ps

    cfg = ps.EnvConfig(max_steps=120)
    task = ps.build_scenario("uniform", 13, cfg)
    traces = []
    for backend in ("compiled", "python"):
        kernels.use_backend(backend)
        try:
            policy = ps.make_policy("apf", cfg)
            env = ps.make_env(cfg, policy)
            result = ps.run_episode(env, policy, task, 9, collect_log=True)
            traces.append(result)
        finally:
            kernels.use_backend("compiled")
    a, b = traces
    assert a.steps == b.steps and a.captured == b.captured
    assert a.reward_total == b.reward_total
    for ra, rb in zip(a.log, b.log):
        assert np.array_equal(ra.pursuers, rb.pursuers)
        assert np.array_equal(ra.evader_p, rb.evader_p)
