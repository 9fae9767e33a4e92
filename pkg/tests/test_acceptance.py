"""Acceptance suite.

One test per acceptance criterion, each printing a PASS/FAIL line and
asserting the stated tolerances. Run with `pytest tests/test_acceptance.py -v`
(add -s to see the per-criterion lines inline).
"""

import math
import time

import numpy as np

import pursuitsim as ps
from pursuitsim.curriculum import (ArchiveEntry, CurriculumConfig,
                                   CurriculumEngine, curriculum_loop,
                                   evaluate_task, expand, sample_batch,
                                   sample_global)
from pursuitsim.dynamics import QuadParams, QuadState, integrate
from pursuitsim.evader import EvaderConfig, evader_force, evader_step
from pursuitsim.harness import (build_scenario, evaluate, make_env,
                                metrics_from_episodes, radius_sweep,
                                run_episode)
from pursuitsim.predictor import (ConstantVelocityPredictor, OraclePredictor,
                                  collect_windows, fit_linear,
                                  prediction_error, TickRecord)
from pursuitsim.pursuers import DistanceThresholdPolicy, make_policy
from pursuitsim.world import (EnvConfig, PursuitEnv, TaskParams,
                              compute_reward)

PAR = QuadParams()


def _report(name, body):
    try:
        body()
    except BaseException:
        print(f"[ACCEPTANCE] {name}: FAIL", flush=True)
        raise
    print(f"[ACCEPTANCE] {name}: PASS", flush=True)


# ---------------------------------------------------------------------------
# Dynamics correctness
# ---------------------------------------------------------------------------

def test_dynamics_hover_equilibrium():
    def body():
        t0 = time.perf_counter()
        cmd = np.full(4, PAR.hover_rotor_speed)
        s = QuadState(rotor_speeds=cmd.copy())
        for _ in range(100):
            s = integrate(s, cmd, 0.005, PAR, n_substeps=2)
        assert np.linalg.norm(s.p) < 1e-6
        assert time.perf_counter() - t0 < 1.0

    _report("dynamics: hover drift < 1e-6 m over 100 ticks in < 1 s", body)


def test_dynamics_rk4_order():
    def body():
        par = QuadParams(inertia=[1.1e-5, 1.9e-5, 2.9e-5])
        w0 = np.array([3.0, -2.0, 1.0])
        total = 0.5

        def run(dt):
            s = QuadState(w=w0)
            for _ in range(int(round(total / dt))):
                s = integrate(s, np.zeros(4), dt, par)
            return np.concatenate([s.q, s.w])

        ref = run(0.02 / 64)
        ratio = np.linalg.norm(run(0.02) - ref) \
            / np.linalg.norm(run(0.01) - ref)
        assert 12.0 <= ratio <= 20.0, f"ratio {ratio}"

    _report("dynamics: RK4 error ratio in [12, 20] when halving dt", body)


def test_dynamics_quaternion_norm():
    def body():
        rng = np.random.default_rng(100)
        worst = 0.0
        for _ in range(100000):
            q = rng.normal(size=4)
            q /= np.linalg.norm(q)
            s = QuadState(p=rng.normal(0, 0.3, 3), q=q,
                          v=rng.normal(0, 1, 3), w=rng.normal(0, 3, 3),
                          rotor_speeds=rng.uniform(0, PAR.Omega_max, 4))
            out = integrate(s, rng.uniform(0, PAR.Omega_max, 4), 0.005, PAR)
            err = abs(float(np.linalg.norm(out.q)) - 1.0)
            if err > worst:
                worst = err
        assert worst < 1e-9, worst

    _report("dynamics: quaternion norm within 1e-9 over 1e5 random steps",
            body)


# ---------------------------------------------------------------------------
# Geometry oracle
# ---------------------------------------------------------------------------

def test_geometry_oracle():
    def body():
        t0 = time.perf_counter()
        rng = np.random.default_rng(200)
        r_obs = 0.1
        t_grid = np.linspace(0.0, 1.0, 10001)  # 1e-4 resolution
        disagreements = 0
        for _ in range(10000):
            a = rng.uniform(-0.9, 0.9, 2)
            b = rng.uniform(-0.9, 0.9, 2)
            c = rng.uniform(-0.9, 0.9, (1, 2))
            exact = ps.line_of_sight(np.append(a, 0.5), np.append(b, 0.5),
                                     c, r_obs)
            pts = a[None, :] + t_grid[:, None] * (b - a)[None, :]
            d2 = (pts[:, 0] - c[0, 0]) ** 2 + (pts[:, 1] - c[0, 1]) ** 2
            sampled = not bool(np.any(d2 < r_obs * r_obs))
            if exact != sampled:
                disagreements += 1
                ab = b - a
                l2 = float(ab @ ab)
                tt = 0.0 if l2 == 0 else np.clip(
                    float((c[0] - a) @ ab) / l2, 0.0, 1.0)
                dmin = float(np.linalg.norm(a + tt * ab - c[0]))
                assert abs(dmin - r_obs) < 1e-4, (dmin, r_obs)
        elapsed = time.perf_counter() - t0
        assert elapsed < 10.0, elapsed

    _report("geometry: exact LOS agrees with 1e-4 dense oracle on 1e4 cases "
            "in < 10 s", body)


# ---------------------------------------------------------------------------
# Reward constants
# ---------------------------------------------------------------------------

def test_reward_constants():
    def body():
        # direct constants on hand arithmetic
        r = compute_reward(np.array([0.5, 0.5, 0.5]), 0, np.zeros((3, 3)),
                           None, "one", 0.3)
        assert r.distance == -0.05 and r.total == -0.05
        r = compute_reward(np.array([0.29, 1.0, 1.0]), 0, np.zeros((3, 3)),
                           None, "one", 0.3)
        assert r.capture == 6.0
        a = np.full((3, 3), 0.25)
        r = compute_reward(np.array([0.5, 0.5, 0.5]), 1, a, a.copy(), "two",
                           0.3)
        assert r.collision == -10.0 and r.smoothness == 2.0

        # scripted 3-tick environment fixture, stage two, velocity mode:
        # tick 1 plain distance, tick 2 adds a collision, tick 3 captures
        cfg = EnvConfig(reward_stage="two", pursuer_max_speed=8.0,
                        clearance=0.07)
        env = PursuitEnv(cfg, action_mode="velocity", tau_v=0.0)
        task = TaskParams(obstacles=[[0.45, 0.0]],
                          pursuer_starts=[[0.8, 0.0, 0.6], [-0.7, 0.35, 0.6],
                                          [-0.7, -0.35, 0.6]],
                          evader_start=[0.0, 0.0, 0.6])
        env.reset(task, seed=0)
        zero = np.zeros((3, 3))

        r1 = env.step(zero)
        dists = np.linalg.norm(env.last_info["pursuer_positions"]
                               - env.last_info["evader_position"], axis=1)
        dsum = 0.0
        for d in dists:
            dsum += float(d)
        assert r1.rewards.distance == -0.1 * (dsum / 3)
        assert r1.rewards.capture == 0.0 and r1.rewards.collision == 0.0
        assert r1.rewards.smoothness == 2.0  # first tick, zero action delta

        # pursuer 0 sprints into the obstacle keep-out ring ...
        act = np.zeros((3, 3))
        act[0] = [-8.0, 0.0, 0.0]
        saw_collision = False
        r3 = None
        for _ in range(30):
            r3 = env.step(act)
            if r3.rewards.collision != 0.0:
                assert r3.rewards.collision == -10.0  # exactly one violator
                saw_collision = True
            if r3.done:
                break
        # ... and then through it onto the evader for the capture bonus
        assert saw_collision
        assert r3.rewards.capture == 6.0
        assert r3.info["captured"]

    _report("rewards: +6 capture, -0.1 mean distance, -10 collision, "
            "2.0*e^0 smoothness reproduced exactly", body)


# ---------------------------------------------------------------------------
# Environment protocol
# ---------------------------------------------------------------------------

def test_environment_protocol():
    def body():
        cfg = EnvConfig()
        assert cfg.capture_radius == 0.3
        assert cfg.max_steps == 800
        assert cfg.k_nearest_obstacles == 3
        assert cfg.mask_value == -5.0

        # capture strictly inside 0.3 and not at 0.31
        assert compute_reward(np.array([0.31]), 0, np.zeros((1, 3)), None,
                              "one", cfg.capture_radius).capture == 0.0
        assert compute_reward(np.array([0.29]), 0, np.zeros((1, 3)), None,
                              "one", cfg.capture_radius).capture == 6.0

        # full-length episode terminates at exactly 800 with no capture
        policy = make_policy("hover", cfg)
        env = make_env(cfg, policy)
        task = build_scenario("obstacle_free", 2, cfg)
        result = run_episode(env, policy, task, 2)
        assert result.steps == 800 and not result.captured

        # k = 3 nearest obstacles observed, farthest dropped
        env2 = PursuitEnv(cfg)
        task4 = TaskParams(
            obstacles=[[0.3, 0.0], [-0.3, 0.2], [0.0, -0.4], [0.5, 0.3]],
            pursuer_starts=[[-0.5, -0.5, 0.6], [0.5, -0.5, 0.6],
                            [0.0, -0.7, 0.6]],
            evader_start=[0.0, 0.6, 0.6])
        obs = env2.reset(task4, seed=0)
        lay = cfg.layout
        assert obs[0, lay.obstacles].reshape(-1, 3).shape[0] == 3

        # mask value -5 when occluded
        wall = [[x, 0.0] for x in (-0.44, -0.22, 0.0, 0.22, 0.44)]
        hidden = TaskParams(obstacles=wall,
                            pursuer_starts=[[-0.2, -0.5, 0.6],
                                            [0.0, -0.5, 0.6],
                                            [0.2, -0.5, 0.6]],
                            evader_start=[0.0, 0.5, 0.6])
        obs = env2.reset(hidden, seed=0)
        for i in range(3):
            assert np.array_equal(obs[i, lay.rel_evader], [-5.0] * 3)

    _report("environment: capture 0.3, max 800 steps, k = 3, mask -5 "
            "verified by fixtures", body)


# ---------------------------------------------------------------------------
# Evader properties
# ---------------------------------------------------------------------------

def test_evader_properties():
    def body():
        rng = np.random.default_rng(300)
        cfg = EvaderConfig()
        R, H, r_obs = 0.9, 1.2, 0.1
        for _ in range(1000):
            n = int(rng.integers(1, 5))
            m = int(rng.integers(0, 6))
            e = np.append(0.8 * np.sqrt(rng.random())
                          * np.array([np.cos(a := rng.uniform(0, 2 * np.pi)),
                                      np.sin(a)]), rng.uniform(0.1, 1.1))
            pursuers = rng.uniform(-0.6, 0.6, (n, 3))
            pursuers[:, 2] = rng.uniform(0.1, 1.1, n)
            obstacles = rng.uniform(-0.6, 0.6, (m, 2))

            f = evader_force(e, pursuers, obstacles, cfg, R, H, r_obs)

            # independent term-by-term oracle
            want = np.zeros(3)
            for p in pursuers:
                diff = e - p
                d = np.linalg.norm(diff)
                if d > 1e-12:
                    want += cfg.w_pursuer / max(d, cfg.eps_dist) * (diff / d)
            for c in obstacles:
                diff = e[:2] - c
                d = np.linalg.norm(diff)
                if d > 1e-12:
                    want[:2] += cfg.w_obstacle \
                        / max(d - r_obs, cfg.eps_dist) * (diff / d)
            rr = np.linalg.norm(e[:2])
            if rr > 1e-12:
                want[:2] += cfg.w_boundary / max(R - rr, cfg.eps_dist) \
                    * (-e[:2] / rr)
            want[2] += cfg.w_boundary / max(e[2], cfg.eps_dist)
            want[2] -= cfg.w_boundary / max(H - e[2], cfg.eps_dist)
            assert np.max(np.abs(f - want)) <= 1e-9

            # speed invariance: pre-clip displacement is exactly 1.3 * dt
            if np.linalg.norm(f) > 1e-9:
                heading = f / np.linalg.norm(f)
                new_p, _ = evader_step(e, np.zeros(3), f, 0.01, cfg, 10.0,
                                       10.0)  # huge arena: no clipping
                assert abs(np.linalg.norm(new_p - e) - 1.3 * 0.01) < 1e-12
                # direction scale invariance
                lam = float(rng.uniform(0.2, 5.0))
                scaled = EvaderConfig(w_pursuer=lam * cfg.w_pursuer,
                                      w_obstacle=lam * cfg.w_obstacle,
                                      w_boundary=lam * cfg.w_boundary)
                f2 = evader_force(e, pursuers, obstacles, scaled, R, H,
                                  r_obs)
                h2 = f2 / np.linalg.norm(f2)
                assert np.max(np.abs(heading - h2)) <= 1e-9

    _report("evader: speed invariance, scale invariance, and force oracle "
            "<= 1e-9 on 1e3 scenes", body)


# ---------------------------------------------------------------------------
# Curriculum
# ---------------------------------------------------------------------------

def frontier_setup():
    env_cfg = EnvConfig(pursuer_max_speed=5.0, max_steps=120)
    policy = DistanceThresholdPolicy(env_cfg, full_dist=0.5, zero_dist=1.0)
    return env_cfg, policy


def test_curriculum_invariants():
    def body():
        env_cfg, policy = frontier_setup()
        cur = CurriculumConfig(batch_size=6, delta=0.05,
                               eval_episodes_per_task=6)
        engine = CurriculumEngine(cur, env_cfg, seed=7)
        for _ in range(100):
            batch = engine.propose()
            rates = [evaluate_task(policy, t, env_cfg,
                                   cur.eval_episodes_per_task, 7,
                                   engine.iteration, s)
                     for s, t in enumerate(batch.tasks)]
            reeval = [evaluate_task(policy, t, env_cfg,
                                    cur.eval_episodes_per_task, 7,
                                    engine.iteration, len(batch.tasks) + s)
                      for s, t in enumerate(batch.reeval_tasks)]
            engine.submit(rates, reeval)
            for entry in engine.archive:
                assert 0.5 <= entry.success_rate <= 0.9

        # local expansion never touches obstacles; all outputs valid
        rng = np.random.default_rng(42)
        base = sample_global(env_cfg, rng)
        for _ in range(10000):
            out = expand(base, 0.15, rng, env_cfg)
            assert np.array_equal(out.obstacles, base.obstacles)
            assert out.validation_report(env_cfg) == []

        # expansion fraction ~ Bernoulli(0.7) over 1e4 slot draws
        cur2 = CurriculumConfig(p_expand=0.7, batch_size=10000, delta=0.05)
        archive = [ArchiveEntry(base, 0.7)]
        _, expanded = sample_batch(archive, cur2, env_cfg,
                                   np.random.default_rng(9))
        frac = float(np.mean(expanded))
        assert abs(frac - 0.7) <= 0.02, frac

    _report("curriculum: band [0.5, 0.9] after all 100 iterations, "
            "expansion keeps obstacles, fraction 0.7 +/- 0.02", body)


def test_curriculum_frontier_concentration():
    def body():
        t0 = time.perf_counter()
        env_cfg, policy = frontier_setup()
        cur = CurriculumConfig(batch_size=8, delta=0.05,
                               eval_episodes_per_task=10)
        archive, _ = curriculum_loop(policy, cur, env_cfg, iterations=50,
                                     seed=0)
        assert len(archive) > 20
        d0 = np.array([
            float(np.min(np.linalg.norm(
                e.task.pursuer_starts - e.task.evader_start, axis=1)))
            for e in archive])
        # success probability clip((1.0 - d)/0.5) lies in [0.5, 0.9]
        # exactly for d in [0.55, 0.75]
        frac = float(np.mean((d0 >= 0.55) & (d0 <= 0.75)))
        assert frac >= 0.8, frac
        assert time.perf_counter() - t0 < 120.0

    _report("curriculum: >= 80% of archive in the analytic success band "
            "after 50 iterations in < 2 min", body)


# ---------------------------------------------------------------------------
# Heuristic baselines
# ---------------------------------------------------------------------------

def test_heuristic_radius_trend():
    def body():
        t0 = time.perf_counter()
        cfg = EnvConfig()
        radii = [0.3, 0.45, 0.6]
        for name in ("angelani", "apf"):
            policy = make_policy(name, cfg)
            rows = radius_sweep(policy, radii, cfg, episodes_per_seed=25,
                                seeds=(0, 1, 2))
            rates = [row["metrics"].capture_rate for row in rows]
            assert rates[0] <= rates[1] <= rates[2], (name, rates)
            assert rates[2] >= 0.7, (name, rates)
        assert time.perf_counter() - t0 < 300.0

    _report("heuristics: capture rate non-decreasing over radii "
            "{0.3, 0.45, 0.6} and rate(0.6) >= 0.7 in < 5 min", body)


# ---------------------------------------------------------------------------
# Predictor
# ---------------------------------------------------------------------------

def test_predictor_criteria():
    def body():
        # oracle predictor: exactly zero error with frozen pursuers
        from pursuitsim.pursuers import Policy

        class Frozen(Policy):
            command_type = "velocity"

            def __init__(self, cfg):
                self.cfg = cfg
                self.reset(0)

            def act(self, obs, info):
                return np.zeros((self.cfg.n_pursuers, 3))

        cfg = EnvConfig(max_steps=80)
        policy = Frozen(cfg)
        env = make_env(cfg, policy)
        task = TaskParams(obstacles=[[0.3, 0.0], [-0.3, 0.2]],
                          pursuer_starts=[[-0.5, -0.5, 0.6],
                                          [0.5, -0.5, 0.6],
                                          [0.0, -0.7, 0.6]],
                          evader_start=[0.0, 0.3, 0.6])
        logs = [run_episode(env, policy, task, seed, collect_log=True).log
                for seed in range(3)]
        oracle = OraclePredictor(cfg, EvaderConfig(speed=cfg.evader_speed))
        oracle.bind_task(task.obstacles)
        assert prediction_error(oracle, logs, cfg) == 0.0

        # linear predictor on exactly affine data
        lcfg = EnvConfig(history_length=6, prediction_horizon=3)
        v = np.array([1.3, 0.0, 0.0])
        p0 = np.array([-0.4, -0.2, 0.5])
        pursuers = np.random.default_rng(0).uniform(-0.5, 0.5, (3, 3))
        line = [TickRecord(tick=t, pursuers=pursuers.copy(),
                           evader_p=p0 + v * 0.01 * t, evader_v=v.copy(),
                           detected=True) for t in range(60)]
        pairs = collect_windows(line, 6, 3)
        _, diag = fit_linear(pairs, lcfg, ridge=1e-10)
        assert diag["loss"] < 1e-8, diag["loss"]

        # window count formula on 100 random configurations
        rng = np.random.default_rng(77)
        for _ in range(100):
            n = int(rng.integers(1, 12))
            k = int(rng.integers(1, 8))
            length = int(rng.integers(0, 40))
            log = line[:length]
            assert len(collect_windows(log, n, k)) == \
                max(0, length - (n + k) + 1)

    _report("predictor: oracle error 0, linear loss < 1e-8 on affine data, "
            "window count formula exact on 100 cases", body)


# ---------------------------------------------------------------------------
# Metrics protocol
# ---------------------------------------------------------------------------

def test_metrics_protocol():
    def body():
        from pursuitsim.harness import EpisodeResult

        def ep(captured, step, steps):
            return EpisodeResult(captured=captured, capture_step=step,
                                 steps=steps, collisions_total=0,
                                 metric_collisions=0, failed=False,
                                 reward_total=0.0)

        m = metrics_from_episodes(
            [[ep(True, 300, 300), ep(False, None, 800), ep(True, 400, 400)]],
            max_steps=800)
        assert abs(m.capture_rate - 2.0 / 3.0) < 1e-12
        assert abs(m.capture_step - 500.0) < 1e-12

        # full protocol end-to-end: 3 seeds x 100 episodes under 10 minutes
        t0 = time.perf_counter()
        cfg = EnvConfig()
        policy = make_policy("apf", cfg)
        metrics = evaluate(policy, "obstacle_free", cfg,
                           episodes_per_seed=100, seeds=(0, 1, 2))
        elapsed = time.perf_counter() - t0
        assert metrics.episodes == 300
        assert 0.0 <= metrics.capture_rate <= 1.0
        assert elapsed < 600.0, elapsed

    _report("metrics: [300, fail, 400] fixture exact; 3 x 100 episode "
            "protocol end-to-end < 10 min", body)


# ---------------------------------------------------------------------------
# Determinism & throughput
# ---------------------------------------------------------------------------

def test_determinism_and_throughput():
    def body():
        from pursuitsim.bench import throughput

        cfg = EnvConfig(max_steps=200)
        policy = make_policy("janosov", cfg)
        a = evaluate(policy, "uniform", cfg, episodes_per_seed=5,
                     seeds=(0, 1))
        b = evaluate(policy, "uniform", cfg, episodes_per_seed=5,
                     seeds=(0, 1))
        assert a == b, "metrics must be bit-identical across repeated runs"

        single = throughput(envs=16, steps=1200, workers=1, mode="ctbr")
        pooled = throughput(envs=16, steps=1200, workers=8, mode="ctbr")
        assert pooled["ticks_per_s"] >= 1e4, pooled["ticks_per_s"]
        efficiency = pooled["ticks_per_s"] / (8 * single["ticks_per_s"])
        import os
        assert efficiency >= 0.7, (
            f"parallel efficiency {efficiency:.3f} < 0.7 on "
            f"{os.cpu_count()} CPU core(s); 8 workers need >= 8 cores to "
            f"reach 0.7 (aggregate {pooled['ticks_per_s']:.0f} ticks/s, "
            f"single worker {single['ticks_per_s']:.0f} ticks/s)")

    _report("determinism & throughput: bit-identical metrics, >= 1e4 "
            "ticks/s aggregate on 8 workers, parallel efficiency >= 0.7",
            body)
