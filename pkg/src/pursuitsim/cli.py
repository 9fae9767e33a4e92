"""Command-line interface.

Exit codes: 0 success, 1 validation error (bad config/arguments/tasks),
2 runtime failure.
"""

import argparse
import json
import sys

import numpy as np

from .config import ConfigError, load_config
from .curriculum import curriculum_loop, save_archive, stats_to_csv
from .harness import (SCENARIO_NAMES, build_scenario, evaluate, grid_search,
                      make_env, radius_sweep, run_episode)
from .pursuers import make_policy
from .world import TaskValidationError


def _parse_seeds(text):
    return tuple(int(s) for s in text.split(",") if s.strip())


def _parse_floats(text):
    return [float(s) for s in text.split(",") if s.strip()]


def _policy_params(app, name):
    params = dict(app.policies.get(name, {}))
    params.pop("grid", None)  # reserved: grid-search ranges, not a parameter
    return params


def _policy_from_args(args, app):
    return make_policy(args.policy, app.env, quad_params=app.quad,
                       **_policy_params(app, args.policy))


def _add_common(p):
    p.add_argument("--config", default=None, help="JSON config file")
    p.add_argument("--seed", type=int, default=0)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="pursuitsim",
        description="Multi-UAV pursuit-evasion simulator and evaluation "
                    "harness")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evaluate", help="run the evaluation protocol")
    _add_common(p)
    p.add_argument("--policy", required=True)
    p.add_argument("--scenario", default="uniform", choices=SCENARIO_NAMES)
    p.add_argument("--episodes", type=int, default=None,
                   help="episodes per seed (default from config)")
    p.add_argument("--seeds", type=_parse_seeds, default=None,
                   help="comma-separated seeds (default from config)")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out", default=None, help="write metrics JSON here")

    p = sub.add_parser("radius-sweep", help="capture-radius sweep")
    _add_common(p)
    p.add_argument("--policy", required=True)
    p.add_argument("--radii", type=_parse_floats, default=[0.3, 0.45, 0.6])
    p.add_argument("--episodes", type=int, default=None)
    p.add_argument("--seeds", type=_parse_seeds, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out", default=None)

    p = sub.add_parser("grid-search", help="hyperparameter grid search")
    _add_common(p)
    p.add_argument("--policy", required=True)
    p.add_argument("--grid", default=None,
                   help="JSON object: param -> list of values (default: the "
                        "'grid' key of the policy's config section)")
    p.add_argument("--scenario", default="uniform", choices=SCENARIO_NAMES)
    p.add_argument("--episodes", type=int, default=30)
    p.add_argument("--seeds", type=_parse_seeds, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out", default=None)

    p = sub.add_parser("curriculum", help="run the adaptive task generator")
    _add_common(p)
    p.add_argument("--policy", required=True)
    p.add_argument("--iterations", type=int, required=True)
    p.add_argument("--archive-out", default=None)
    p.add_argument("--stats-out", default=None)

    p = sub.add_parser("export", help="export episode trajectories as JSONL")
    _add_common(p)
    p.add_argument("--out", required=True)
    p.add_argument("--policy", default="apf")
    p.add_argument("--scenario", default="uniform", choices=SCENARIO_NAMES)
    p.add_argument("--episodes", type=int, default=1)

    p = sub.add_parser("bench", help="throughput report")
    _add_common(p)
    p.add_argument("--envs", type=int, default=8)
    p.add_argument("--steps", type=int, default=500)
    p.add_argument("--workers", type=int, default=8)
    p.add_argument("--mode", default="ctbr", choices=["ctbr", "velocity"])
    return parser


def _cmd_evaluate(args, app):
    policy = _policy_from_args(args, app)
    metrics = evaluate(
        policy, args.scenario, app.env,
        episodes_per_seed=args.episodes or app.eval.episodes_per_seed,
        seeds=args.seeds or app.eval.seeds,
        workers=args.workers or app.eval.workers, **app.env_kwargs())
    print(f"{args.policy} on {args.scenario}: {metrics.summary()}")
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(metrics.as_dict(), fh, indent=2)
    return 0


def _cmd_radius_sweep(args, app):
    policy = _policy_from_args(args, app)
    rows = radius_sweep(
        policy, args.radii, app.env,
        episodes_per_seed=args.episodes or app.eval.episodes_per_seed,
        seeds=args.seeds or app.eval.seeds,
        workers=args.workers or app.eval.workers, **app.env_kwargs())
    for row in rows:
        print(f"radius {row['capture_radius']:.2f}: "
              f"{row['metrics'].summary()}")
    if args.out:
        with open(args.out, "w") as fh:
            json.dump([{"capture_radius": r["capture_radius"],
                        "metrics": r["metrics"].as_dict()} for r in rows],
                      fh, indent=2)
    return 0


def _cmd_grid_search(args, app):
    if args.grid is not None:
        try:
            grid = json.loads(args.grid)
        except json.JSONDecodeError as exc:
            raise ConfigError("--grid", str(exc)) from exc
    else:
        grid = app.policies.get(args.policy, {}).get("grid")
        if not grid:
            raise ConfigError(f"policies.{args.policy}.grid",
                              "no grid given (pass --grid or set it in the "
                              "config)")
    best, table = grid_search(
        args.policy, grid, args.scenario, app.env,
        episodes_per_seed=args.episodes,
        seeds=args.seeds or app.eval.seeds,
        workers=args.workers or app.eval.workers,
        base_params=_policy_params(app, args.policy), **app.env_kwargs())
    for row in table:
        print(f"{row['params']}: {row['metrics'].summary()}")
    print(f"best: {best['params']}")
    if args.out:
        with open(args.out, "w") as fh:
            json.dump({"best": {"params": best["params"],
                                "metrics": best["metrics"].as_dict()},
                       "table": [{"params": r["params"],
                                  "metrics": r["metrics"].as_dict()}
                                 for r in table]}, fh, indent=2)
    return 0


def _cmd_curriculum(args, app):
    policy = _policy_from_args(args, app)
    archive, stats = curriculum_loop(
        policy, app.curriculum, app.env, args.iterations, seed=args.seed,
        **app.env_kwargs())
    for s in stats:
        print(f"iter {s.iteration:4d}  archive {s.archive_size:4d}  "
              f"mean success {s.mean_success:.3f}  "
              f"expanded {s.expansion_fraction:.2f}")
    if args.archive_out:
        save_archive(archive, args.archive_out, iteration=args.iterations)
    if args.stats_out:
        stats_to_csv(stats, args.stats_out)
    return 0


def _cmd_export(args, app):
    from .harness import export_trajectories

    policy = _policy_from_args(args, app)
    env = make_env(app.env, policy, **app.env_kwargs())
    episodes = []
    for ep in range(args.episodes):
        task = build_scenario(args.scenario, args.seed + ep, app.env)
        episodes.append(run_episode(env, policy, task, args.seed + ep,
                                    collect_trajectory=True))
    export_trajectories(episodes, args.out)
    total = sum(len(e.trajectory) for e in episodes)
    print(f"wrote {len(episodes)} episode(s), {total} ticks to {args.out}")
    return 0


def _cmd_bench(args, app):
    from .bench import bench_report, format_report

    report = bench_report(envs=args.envs, steps=args.steps,
                          workers=args.workers, mode=args.mode,
                          env_cfg=app.env, seed=args.seed)
    print(format_report(report))
    return 0


_COMMANDS = {
    "evaluate": _cmd_evaluate,
    "radius-sweep": _cmd_radius_sweep,
    "grid-search": _cmd_grid_search,
    "curriculum": _cmd_curriculum,
    "export": _cmd_export,
    "bench": _cmd_bench,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse uses 2 for usage errors; those are validation errors here
        return 1 if exc.code else 0
    np.seterr(all="ignore")
    try:
        app = load_config(args.config)
        return _COMMANDS[args.command](args, app)
    except (ConfigError, TaskValidationError, ValueError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001
        print(f"runtime failure: {type(exc).__name__}: {exc}",
              file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
