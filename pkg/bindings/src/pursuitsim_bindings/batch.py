"""Vectorized wrapper stepping many handles with one call."""

import numpy as np

from . import api


class BatchEnv:
    """Owns a set of environment handles and steps them in lockstep.

    Stepping requires every member episode to be live; finished members must
    be reset first (``dones`` from the previous step says which).
    """

    def __init__(self, n_envs, config=None, action_mode="ctbr"):
        if n_envs < 1:
            raise ValueError("n_envs must be >= 1")
        self.handles = [api.env_create(config, action_mode=action_mode)
                        for _ in range(n_envs)]
        self._dones = np.ones(n_envs, dtype=bool)

    def __len__(self):
        return len(self.handles)

    def reset_all(self, task=None, seeds=None):
        if seeds is None:
            seeds = range(len(self.handles))
        seeds = list(seeds)
        if len(seeds) != len(self.handles):
            raise ValueError("need one seed per environment")
        obs = [api.env_reset(h, task, seed)
               for h, seed in zip(self.handles, seeds)]
        self._dones[:] = False
        return np.stack(obs)

    def reset_at(self, i, task=None, seed=0):
        obs = api.env_reset(self.handles[i], task, seed)
        self._dones[i] = False
        return obs

    def step(self, actions):
        """actions: (n_envs, n_pursuers, action_dim) -> stacked results."""
        actions = np.asarray(actions, dtype=np.float64)
        if actions.shape[0] != len(self.handles):
            raise ValueError(f"expected {len(self.handles)} action rows, "
                             f"got {actions.shape[0]}")
        if self._dones.any():
            bad = np.flatnonzero(self._dones).tolist()
            raise RuntimeError(f"environments {bad} are done; reset them "
                               "before stepping")
        obs, rewards, dones, infos = [], [], [], []
        for i, h in enumerate(self.handles):
            o, r, d, info = api.env_step(h, actions[i])
            obs.append(o)
            rewards.append(r)
            dones.append(d)
            infos.append(info)
        self._dones[:] = dones
        return (np.stack(obs), np.asarray(rewards), np.asarray(dones),
                infos)

    @property
    def dones(self):
        return self._dones.copy()

    def close(self):
        for h in self.handles:
            api.env_close(h)
        self.handles = []

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
