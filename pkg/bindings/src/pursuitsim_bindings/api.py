"""Handle-based flat-array environment API.

Every function works on an integer handle owning one native environment.
Nothing but plain numbers, numpy arrays, and JSON-compatible dicts crosses
this boundary, so any trainer framework can sit on top. Observations are the
native (n_pursuers, obs_dim) float64 rows, bit-identical to a native run
under the same config, task, seed, and actions.
"""

import itertools

import numpy as np

from pursuitsim.config import AppConfig, config_from_dict, load_config
from pursuitsim.harness import SCENARIO_NAMES, build_scenario
from pursuitsim.world import PursuitEnv, TaskParams

_registry = {}
_next_handle = itertools.count(1)

API_VERSION = 1


class _HandleState:
    __slots__ = ("env", "app", "action_shape")

    def __init__(self, env, app):
        self.env = env
        self.app = app
        self.action_shape = (app.env.n_pursuers,
                             4 if env.action_mode == "ctbr" else 3)


def _resolve_config(config=None):
    if config is None:
        return AppConfig()
    if isinstance(config, AppConfig):
        return config
    if isinstance(config, dict):
        return config_from_dict(config)
    return load_config(config)


def _state(handle):
    try:
        return _registry[handle]
    except KeyError:
        raise KeyError(f"unknown or closed environment handle {handle!r}") \
            from None


def env_create(config=None, action_mode="ctbr"):
    """Create a native environment; returns an opaque integer handle.

    ``config`` is None (defaults), a config dict, an AppConfig, or a path to
    a JSON config file. Validation errors carry their field path.
    """
    app = _resolve_config(config)
    env = PursuitEnv(cfg=app.env, action_mode=action_mode,
                     **app.env_kwargs())
    handle = next(_next_handle)
    _registry[handle] = _HandleState(env, app)
    return handle


def env_close(handle):
    """Release the native environment behind the handle."""
    _registry.pop(handle, None)


def env_count():
    """Number of live handles (leak checks)."""
    return len(_registry)


def resolve_task(task, seed, env_cfg):
    if task is None:
        task = "uniform"
    if isinstance(task, str):
        if task not in SCENARIO_NAMES:
            raise ValueError(f"unknown scenario {task!r}; choose from "
                             f"{SCENARIO_NAMES}")
        return build_scenario(task, seed, env_cfg)
    if isinstance(task, dict):
        return TaskParams.from_dict(task)
    if isinstance(task, TaskParams):
        return task
    raise TypeError("task must be None, a scenario name, a task dict, or "
                    "TaskParams")


def env_reset(handle, task=None, seed=0):
    """Reset to a task (TaskParams/dict), a scenario name, or a uniform draw.

    Returns the (n_pursuers, obs_dim) observation array. Reuse after episode
    end is permitted.
    """
    st = _state(handle)
    resolved = resolve_task(task, seed, st.app.env)
    return st.env.reset(resolved, seed=seed)


def env_step(handle, actions):
    """Advance one tick; returns (observations, reward, done, info).

    The action array must have shape (n_pursuers, 4) for CTBR environments
    (or (n_pursuers, 3) in velocity mode) with finite values; violations
    raise before the environment is touched.
    """
    st = _state(handle)
    actions = np.asarray(actions, dtype=np.float64)
    if actions.shape != st.action_shape:
        raise ValueError(f"expected actions of shape {st.action_shape}, "
                         f"got {actions.shape}")
    if not np.isfinite(actions).all():
        raise ValueError("non-finite action")
    result = st.env.step(actions)
    info = dict(result.info)
    info["rewards"] = {
        "capture": result.rewards.capture,
        "distance": result.rewards.distance,
        "collision": result.rewards.collision,
        "smoothness": result.rewards.smoothness,
    }
    return result.observations, result.rewards.total, result.done, info


def observation_descriptor(handle):
    """Machine-readable observation index table for this handle's config."""
    st = _state(handle)
    doc = st.app.env.layout.describe(st.app.env.mask_value)
    doc["api_version"] = API_VERSION
    return doc
