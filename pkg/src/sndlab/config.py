"""Experiment configuration schema: strict loading and object construction.

A run is fully declared by one YAML file; unknown keys anywhere are rejected
so that every output can be reproduced from the config echoed into its
provenance header.  A config may carry ``variants`` (named deep-merge
overrides of the base document), letting one file declare a whole sweep.
"""

from __future__ import annotations

import copy
import math
from dataclasses import asdict, dataclass, field

import yaml

from .control import DiversityTarget
from .envs import (
    WindSchedule,
    differential_steering_env,
    flocking_wind_env,
    goal_navigation_env,
)
from .policies import PolicySet, PolicyShape
from .seeding import derive_seed
from .training import TrainerConfig

TASK_IDS = ("goal_navigation", "differential_steering", "flocking_wind")


def _check_keys(data: dict, allowed, path: str) -> None:
    if not isinstance(data, dict):
        raise ValueError(f"{path}: expected a mapping, got {type(data).__name__}")
    unknown = sorted(set(data) - set(allowed))
    if unknown:
        raise ValueError(f"{path}: unknown key(s) {unknown}; allowed: {sorted(allowed)}")


@dataclass(frozen=True)
class TaskConfig:
    id: str
    n: int = 2
    horizon: int = 100
    goal_assignment: tuple[int, ...] | None = None
    wind: tuple[tuple[int, int, float], ...] | None = None

    def __post_init__(self) -> None:
        if self.id not in TASK_IDS:
            raise ValueError(f"task.id must be one of {TASK_IDS}, got {self.id!r}")
        if self.horizon < 1:
            raise ValueError("task.horizon must be positive")
        if self.id == "goal_navigation" and self.goal_assignment is None:
            raise ValueError("goal_navigation requires task.goal_assignment")
        if self.id == "flocking_wind" and self.n != 2:
            raise ValueError("flocking_wind is a two-agent task")
        if self.wind is not None and self.id != "flocking_wind":
            raise ValueError("task.wind only applies to flocking_wind")

    @classmethod
    def from_dict(cls, data: dict, path: str = "task") -> "TaskConfig":
        _check_keys(data, ("id", "n", "horizon", "goal_assignment", "wind"), path)
        kwargs = dict(data)
        if "goal_assignment" in kwargs and kwargs["goal_assignment"] is not None:
            kwargs["goal_assignment"] = tuple(int(g) for g in kwargs["goal_assignment"])
        if "wind" in kwargs and kwargs["wind"] is not None:
            kwargs["wind"] = tuple(tuple(p) for p in kwargs["wind"])
        return cls(**kwargs)

    def wind_schedule(self) -> WindSchedule | None:
        return WindSchedule(self.wind) if self.wind is not None else None


@dataclass(frozen=True)
class PolicyConfig:
    mode: str = "heterogeneous"
    hidden: tuple[int, ...] = (32, 32)
    stddev_mode: str = "global"
    init_log_std: float = math.log(0.6)
    mean_bound: float | None = 1.0
    shared_init: bool = False

    def __post_init__(self) -> None:
        if self.mode not in ("homogeneous", "heterogeneous"):
            raise ValueError(f"policy.mode must be homogeneous or heterogeneous, got {self.mode!r}")

    @classmethod
    def from_dict(cls, data: dict, path: str = "policy") -> "PolicyConfig":
        _check_keys(
            data,
            ("mode", "hidden", "stddev_mode", "init_log_std", "mean_bound", "shared_init"),
            path,
        )
        kwargs = dict(data)
        if "hidden" in kwargs:
            kwargs["hidden"] = tuple(int(h) for h in kwargs["hidden"])
        return cls(**kwargs)


_TRAINER_KEYS = (
    "iterations",
    "episodes_per_iteration",
    "gamma",
    "gae_lambda",
    "clip_epsilon",
    "learning_rate",
    "minibatch_size",
    "epochs",
    "entropy_coeff",
    "eval_episodes",
    "measure_every",
    "checkpoint_every",
    "distance_kind",
)


@dataclass(frozen=True)
class TrainerSection:
    iterations: int = 100
    episodes_per_iteration: int = 20
    gamma: float = 0.99
    gae_lambda: float = 0.9
    clip_epsilon: float = 0.2
    learning_rate: float = 6e-4
    minibatch_size: int = 256
    epochs: int = 4
    entropy_coeff: float = 0.0
    eval_episodes: int = 10
    measure_every: int = 1
    checkpoint_every: int = 0
    distance_kind: str = "w2"

    @classmethod
    def from_dict(cls, data: dict, path: str = "trainer") -> "TrainerSection":
        _check_keys(data, _TRAINER_KEYS, path)
        return cls(**data)


@dataclass(frozen=True)
class ControlSection:
    mode: str = "equality"
    target: float = 0.0
    weight: float = 3.5
    warmup_fraction: float = 0.1
    gradient_steps: int = 2

    @classmethod
    def from_dict(cls, data: dict, path: str = "control") -> "ControlSection":
        _check_keys(data, ("mode", "target", "weight", "warmup_fraction", "gradient_steps"), path)
        return cls(**data)

    def to_target(self) -> DiversityTarget:
        return DiversityTarget(
            mode=self.mode,
            value=self.target,
            weight=self.weight,
            warmup_fraction=self.warmup_fraction,
            gradient_steps=self.gradient_steps,
        )


@dataclass(frozen=True)
class Variant:
    name: str
    overrides: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: dict, path: str) -> "Variant":
        _check_keys(data, ("name", "overrides"), path)
        if "name" not in data:
            raise ValueError(f"{path}: variant needs a name")
        return cls(str(data["name"]), dict(data.get("overrides", {})))


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    task: TaskConfig
    policy: PolicyConfig = PolicyConfig()
    trainer: TrainerSection = TrainerSection()
    control: ControlSection | None = None
    seeds: tuple[int, ...] = (0,)
    out_dir: str | None = None
    variants: tuple[Variant, ...] = ()

    def __post_init__(self) -> None:
        if not self.name:
            raise ValueError("config needs a non-empty name")
        if not self.seeds:
            raise ValueError("config needs at least one seed")
        names = [v.name for v in self.variants]
        if len(names) != len(set(names)):
            raise ValueError("variant names must be unique")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        _check_keys(
            data,
            ("name", "task", "policy", "trainer", "control", "seeds", "out_dir", "variants"),
            "config",
        )
        if "name" not in data or "task" not in data:
            raise ValueError("config requires 'name' and 'task' sections")
        kwargs: dict = {"name": str(data["name"])}
        kwargs["task"] = TaskConfig.from_dict(data["task"])
        if "policy" in data:
            kwargs["policy"] = PolicyConfig.from_dict(data["policy"])
        if "trainer" in data:
            kwargs["trainer"] = TrainerSection.from_dict(data["trainer"])
        if data.get("control") is not None:
            kwargs["control"] = ControlSection.from_dict(data["control"])
        if "seeds" in data:
            kwargs["seeds"] = tuple(int(s) for s in data["seeds"])
        if data.get("out_dir") is not None:
            kwargs["out_dir"] = str(data["out_dir"])
        if "variants" in data:
            kwargs["variants"] = tuple(
                Variant.from_dict(v, f"variants[{i}]") for i, v in enumerate(data["variants"])
            )
        return cls(**kwargs)

    def to_dict(self) -> dict:
        out = {
            "name": self.name,
            "task": {k: v for k, v in asdict(self.task).items() if v is not None},
            "policy": asdict(self.policy),
            "trainer": asdict(self.trainer),
            "seeds": list(self.seeds),
        }
        if self.control is not None:
            out["control"] = asdict(self.control)
        if self.out_dir is not None:
            out["out_dir"] = self.out_dir
        if self.variants:
            out["variants"] = [{"name": v.name, "overrides": v.overrides} for v in self.variants]
        return out


def _deep_merge(base: dict, overrides: dict) -> dict:
    merged = copy.deepcopy(base)
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def apply_variant(config: ExperimentConfig, variant: Variant) -> ExperimentConfig:
    """Deep-merge a variant's overrides into the base config and re-validate."""
    base = config.to_dict()
    base.pop("variants", None)
    merged = _deep_merge(base, variant.overrides)
    merged["name"] = config.name
    return ExperimentConfig.from_dict(merged)


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        data = yaml.safe_load(fh)
    if not isinstance(data, dict):
        raise ValueError(f"{path}: config file must contain a mapping")
    return ExperimentConfig.from_dict(data)


def build_environment(task: TaskConfig, seed: int | None = None):
    if task.id == "goal_navigation":
        return goal_navigation_env(task.n, task.goal_assignment, seed=seed, horizon=task.horizon)
    if task.id == "differential_steering":
        return differential_steering_env(task.n, seed=seed, horizon=task.horizon)
    return flocking_wind_env(seed=seed, schedule=task.wind_schedule(), horizon=task.horizon)


def build_policies(config: ExperimentConfig, env, seed: int) -> PolicySet:
    shape = PolicyShape(
        obs_dim=env.obs_dim,
        action_dim=env.action_dim,
        hidden=config.policy.hidden,
        stddev_mode=config.policy.stddev_mode,
        init_log_std=config.policy.init_log_std,
        mean_bound=config.policy.mean_bound,
    )
    init_seed = derive_seed(seed, "policy-init")
    agent_seeds = None
    if config.policy.mode == "heterogeneous" and config.policy.shared_init:
        agent_seeds = [init_seed] * env.n_agents
    return PolicySet.initialize(
        config.policy.mode, env.n_agents, shape, seed=init_seed, agent_seeds=agent_seeds
    )


def build_trainer_config(config: ExperimentConfig, seed: int) -> TrainerConfig:
    return TrainerConfig(
        **asdict(config.trainer),
        seed=seed,
        wind_schedule=config.task.wind_schedule(),
        diversity_target=config.control.to_target() if config.control else None,
    )
