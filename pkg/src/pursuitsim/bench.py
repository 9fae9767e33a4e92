"""Environment throughput benchmark.

Runs scripted actions through full environment ticks (dynamics, evader,
detection, observations, rewards), reporting ticks per second for one worker
and aggregate over a worker pool, plus a compiled-vs-python backend
comparison. Parallel efficiency is aggregate / (workers * single-worker).
"""

import os
import time

import numpy as np

from .curriculum import sample_global
from .world import EnvConfig, PursuitEnv


def _bench_chunk(args):
    env_cfg, mode, n_envs, steps, seed, backend = args
    from . import kernels
    kernels.use_backend(backend)
    rng = np.random.default_rng(seed)
    ticks = 0
    if mode == "ctbr":
        from .dynamics import QuadParams
        action = np.zeros((env_cfg.n_pursuers, 4))
        action[:, 0] = QuadParams().hover_thrust_fraction
    else:
        action = np.full((env_cfg.n_pursuers, 3), 0.2)
    for e in range(n_envs):
        env = PursuitEnv(cfg=env_cfg, action_mode=mode)
        task = sample_global(env_cfg, rng)
        env.reset(task, seed=seed + e)
        for _ in range(steps):
            if env.done:
                env.reset(task, seed=seed + e)
            env.step(action)
            ticks += 1
    return ticks


def throughput(envs=8, steps=500, workers=1, mode="ctbr", env_cfg=None,
               seed=0, backend=None):
    """Total environment ticks per second across the worker pool."""
    from .kernels import available_backends
    from .parallel import parallel_map

    if backend is None:
        backend = available_backends()[0]
    env_cfg = env_cfg if env_cfg is not None else EnvConfig()
    per = [envs // workers] * workers
    for i in range(envs % workers):
        per[i] += 1
    jobs = [(env_cfg, mode, n, steps, seed + 1000 * i, backend)
            for i, n in enumerate(per) if n > 0]
    t0 = time.perf_counter()
    ticks = sum(parallel_map(_bench_chunk, jobs, workers))
    dt = time.perf_counter() - t0
    return {"ticks": ticks, "seconds": dt, "ticks_per_s": ticks / dt,
            "workers": workers, "envs": envs, "steps": steps, "mode": mode,
            "backend": backend}


def bench_report(envs=8, steps=500, workers=8, mode="ctbr", env_cfg=None,
                 seed=0, compare_backends=True):
    """Full report: backend comparison (1 worker) and pool scaling."""
    from .kernels import available_backends

    report = {"cpu_count": os.cpu_count(), "backends": {}}
    backends = available_backends() if compare_backends else [None]
    for backend in backends:
        r = throughput(envs=max(1, envs // 4), steps=steps, workers=1,
                       mode=mode, env_cfg=env_cfg, seed=seed, backend=backend)
        report["backends"][backend or "default"] = r

    single = throughput(envs=envs, steps=steps, workers=1, mode=mode,
                        env_cfg=env_cfg, seed=seed)
    pooled = throughput(envs=envs, steps=steps, workers=workers, mode=mode,
                        env_cfg=env_cfg, seed=seed)
    report["single_worker"] = single
    report["pooled"] = pooled
    report["parallel_efficiency"] = (
        pooled["ticks_per_s"] / (workers * single["ticks_per_s"]))
    return report


def format_report(report):
    lines = [f"cpu_count: {report['cpu_count']}"]
    for name, r in report["backends"].items():
        lines.append(f"backend {name:>8}: {r['ticks_per_s']:>10.0f} ticks/s "
                     f"(1 worker, {r['ticks']} ticks)")
    s = report["single_worker"]
    p = report["pooled"]
    lines.append(f"1 worker : {s['ticks_per_s']:>10.0f} ticks/s")
    lines.append(f"{p['workers']} workers: {p['ticks_per_s']:>10.0f} ticks/s "
                 f"aggregate")
    lines.append(f"parallel efficiency: {report['parallel_efficiency']:.3f}")
    return "\n".join(lines)
