"""Flat-array environment and curriculum API over pursuitsim.

External RL trainers drive the simulator through integer handles and plain
numpy arrays: ``env_create`` / ``env_reset`` / ``env_step`` / ``env_close``,
the ``BatchEnv`` lockstep wrapper, and ``curriculum_hooks`` for adaptive task
generation with externally evaluated success rates. All numbers are
bit-identical to native runs under equal seeds.
"""

from .api import (API_VERSION, env_close, env_count, env_create, env_reset,
                  env_step, observation_descriptor, resolve_task)
from .batch import BatchEnv
from .hooks import CurriculumHooks, ResultSink, curriculum_hooks

__version__ = "0.1.0"
