"""Deterministic multi-UAV pursuit-evasion simulator.

Quadrotor pursuers under collective-thrust-and-body-rates control chase a
potential-field evader in a cylindrical arena with occlusion-limited shared
detection. Includes heuristic baselines, an evader-prediction pipeline, an
adaptive task curriculum, and an evaluation harness.
"""

from .control import CtbrCommand, PidState, RatePidConfig, ctbr_to_rotor_cmd, \
    velocity_to_motion
from .curriculum import ArchiveEntry, CurriculumConfig, CurriculumEngine, \
    curriculum_loop, expand, sample_batch, sample_global, selection, \
    update_archive
from .dynamics import NonFiniteStateError, QuadParams, QuadState, \
    angular_acceleration, integrate, linear_acceleration, motor_step
from .evader import EvaderConfig, evader_force, evader_step
from .harness import Metrics, build_scenario, evaluate, export_trajectories, \
    grid_search, make_env, radius_sweep, run_episode
from .kernels import BACKEND
from .obs_layout import ObsLayout
from .predictor import ConstantVelocityPredictor, HistoryWindow, \
    LinearPredictor, OraclePredictor, TrainingPair, collect_windows, \
    fit_linear, prediction_error
from .pursuers import AngelaniPolicy, ApfConfig, ApfPolicy, JanosovPolicy, \
    Policy, make_policy
from .world import EnvConfig, Observation, PursuitEnv, StepResult, TaskParams, \
    TaskValidationError, compute_reward, detect_evader, line_of_sight

__version__ = "0.1.0"
