"""Single JSON configuration document with embedded defaults.

Sections: env, quad, control (pid gains + tau_v), evader, policies,
curriculum, eval. Unknown keys and construction failures are reported with
their field path.
"""

import dataclasses
import json
from dataclasses import dataclass, field

from .control import RatePidConfig
from .curriculum import CurriculumConfig
from .dynamics import QuadParams
from .evader import EvaderConfig
from .world import EnvConfig


class ConfigError(ValueError):
    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass
class EvalConfig:
    episodes_per_seed: int = 100
    seeds: tuple = (0, 1, 2)
    workers: int = 1

    def __post_init__(self):
        self.seeds = tuple(int(s) for s in self.seeds)
        if self.episodes_per_seed < 1:
            raise ValueError("episodes_per_seed must be >= 1")


@dataclass
class AppConfig:
    env: EnvConfig = field(default_factory=EnvConfig)
    quad: QuadParams = field(default_factory=QuadParams)
    pid: RatePidConfig = field(default_factory=RatePidConfig)
    tau_v: float = 0.15
    evader: EvaderConfig = None
    policies: dict = field(default_factory=dict)
    curriculum: CurriculumConfig = field(default_factory=CurriculumConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)

    def __post_init__(self):
        if self.evader is None:
            self.evader = EvaderConfig(speed=self.env.evader_speed)

    def env_kwargs(self):
        """Keyword arguments for PursuitEnv construction."""
        return {"quad_params": self.quad, "pid_cfg": self.pid,
                "evader_cfg": self.evader, "tau_v": self.tau_v}


def _build_section(cls, section, path):
    if not isinstance(section, dict):
        raise ConfigError(path, f"expected an object, got "
                                f"{type(section).__name__}")
    names = {f.name for f in dataclasses.fields(cls)}
    for key in section:
        if key not in names:
            raise ConfigError(f"{path}.{key}", "unknown field")
    try:
        return cls(**section)
    except (ValueError, TypeError) as exc:
        raise ConfigError(path, str(exc)) from exc


def config_from_dict(doc):
    if not isinstance(doc, dict):
        raise ConfigError("<root>", "configuration must be a JSON object")
    known = {"env", "quad", "control", "evader", "policies", "curriculum",
             "eval"}
    for key in doc:
        if key not in known:
            raise ConfigError(key, "unknown section")

    env = _build_section(EnvConfig, doc.get("env", {}), "env")
    quad = _build_section(QuadParams, doc.get("quad", {}), "quad")

    control = doc.get("control", {})
    if not isinstance(control, dict):
        raise ConfigError("control", "expected an object")
    for key in control:
        if key not in ("pid", "tau_v"):
            raise ConfigError(f"control.{key}", "unknown field")
    pid = _build_section(RatePidConfig, control.get("pid", {}), "control.pid")
    tau_v = control.get("tau_v", 0.15)
    if not isinstance(tau_v, (int, float)) or tau_v < 0:
        raise ConfigError("control.tau_v", "must be a number >= 0")

    evader_section = dict(doc.get("evader", {}))
    evader_section.setdefault("speed", env.evader_speed)
    evader = _build_section(EvaderConfig, evader_section, "evader")

    policies = doc.get("policies", {})
    if not isinstance(policies, dict):
        raise ConfigError("policies", "expected an object")
    for name, params in policies.items():
        if not isinstance(params, dict):
            raise ConfigError(f"policies.{name}", "expected an object")

    curriculum = _build_section(CurriculumConfig, doc.get("curriculum", {}),
                                "curriculum")
    eval_cfg = _build_section(EvalConfig, doc.get("eval", {}), "eval")

    return AppConfig(env=env, quad=quad, pid=pid, tau_v=float(tau_v),
                     evader=evader, policies=dict(policies),
                     curriculum=curriculum, eval=eval_cfg)


def load_config(path=None):
    """Load AppConfig from a JSON file; None gives embedded defaults."""
    if path is None:
        return AppConfig()
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError("<file>", f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError("<file>", f"invalid JSON in {path}: {exc}") from exc
    return config_from_dict(doc)


def default_config_dict():
    """The full default configuration as a plain JSON-compatible dict."""
    cfg = AppConfig()
    return {
        "env": _dataclass_dict(cfg.env),
        "quad": _dataclass_dict(cfg.quad),
        "control": {"pid": _dataclass_dict(cfg.pid), "tau_v": cfg.tau_v},
        "evader": _dataclass_dict(cfg.evader),
        "policies": {},
        "curriculum": _dataclass_dict(cfg.curriculum),
        "eval": _dataclass_dict(cfg.eval),
    }


def _dataclass_dict(obj):
    out = {}
    for f in dataclasses.fields(obj):
        v = getattr(obj, f.name)
        if hasattr(v, "tolist"):
            v = v.tolist()
        elif isinstance(v, tuple):
            v = list(v)
        out[f.name] = v
    return out
