"""Compact on-policy trainer: clipped policy-gradient with a GAE baseline.

Each iteration collects a fresh on-policy batch, runs a few epochs of
clipped-surrogate minibatch updates (per-agent blocks in heterogeneous mode,
one shared block fed by all agents' data in homogeneous mode), then measures
SND/HSE on a separate evaluation batch drawn from a dedicated seed stream.
Dynamic tasks are driven by mutating the environment's wind between
iterations according to a :class:`~sndlab.envs.WindSchedule`.

Runs are fully reproducible: identical config and seed give identical logs.
"""

from __future__ import annotations

import dataclasses
import math
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from . import control as control_mod
from .distance import collect_batch, distance_matrix, agent_contributions
from .envs import WindSchedule, flocking_wind_env
from .metrics import hse, snd
from .policies import (
    PolicySet,
    PolicyShape,
    _mlp_backward,
    _mlp_forward,
    backward_gaussian,
    forward_gaussian,
    gaussian_log_prob,
)
from .seeding import derive_seed

LOG_STD_BOUNDS = (-5.0, 1.5)  # trainer stability clamp on the global log-std


class TrainingDivergedError(RuntimeError):
    """Raised when a loss or parameter turns non-finite during training."""

    def __init__(self, message: str, iteration: int, log: "TrainingLog"):
        super().__init__(message)
        self.iteration = iteration
        self.log = log


@dataclass
class TrainerConfig:
    iterations: int = 300
    episodes_per_iteration: int = 50
    gamma: float = 0.99
    gae_lambda: float = 0.9
    clip_epsilon: float = 0.2
    learning_rate: float = 3e-4
    minibatch_size: int = 256
    epochs: int = 4
    entropy_coeff: float = 0.0
    seed: int = 0
    eval_episodes: int = 10
    measure_every: int = 1
    checkpoint_every: int = 0  # 0 = no periodic checkpoints
    distance_kind: str = "w2"
    wind_schedule: WindSchedule | None = None
    diversity_target: "control_mod.DiversityTarget | None" = None

    def __post_init__(self) -> None:
        if not (0.0 < self.gamma <= 1.0):
            raise ValueError("gamma must be in (0, 1]")
        if not (0.0 <= self.gae_lambda <= 1.0):
            raise ValueError("gae_lambda must be in [0, 1]")
        if self.clip_epsilon <= 0.0:
            raise ValueError("clip_epsilon must be positive")
        for name in ("iterations", "episodes_per_iteration", "minibatch_size", "epochs",
                     "eval_episodes", "measure_every"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.checkpoint_every < 0:
            raise ValueError("checkpoint_every must be >= 0")
        if self.learning_rate <= 0.0:
            raise ValueError("learning_rate must be positive")


@dataclass(frozen=True)
class TrainingRecord:
    iteration: int
    reward_mean: float
    reward_std: float
    snd: float
    hse: float
    contributions: tuple[float, ...] | None
    wind: float
    elapsed_s: float


class TrainingLog:
    """Append-only per-iteration record of reward and diversity measurements."""

    def __init__(self, seed: int, mode: str, n_agents: int):
        self.seed = seed
        self.mode = mode
        self.n_agents = n_agents
        self._records: list[TrainingRecord] = []
        self.final_matrix = None
        self.diverged_at: int | None = None
        self.divergence_reason: str | None = None

    def append(self, record: TrainingRecord) -> None:
        self._records.append(record)

    @property
    def records(self) -> tuple[TrainingRecord, ...]:
        return tuple(self._records)

    def __len__(self) -> int:
        return len(self._records)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self._records], dtype=float)

    def columns(self) -> dict[str, np.ndarray]:
        names = ("reward_mean", "reward_std", "snd", "hse", "wind")
        return {name: self.column(name) for name in names}

    def to_csv(self, path, provenance: dict | None = None) -> None:
        """Write the log as CSV.

        Wall-clock times are deliberately not serialized so that re-running an
        identical config produces byte-identical files.
        """
        import json

        n_contrib = self.n_agents
        header = ["iteration", "reward_mean", "reward_std", "snd", "hse", "wind"]
        header += [f"contrib_{i}" for i in range(n_contrib)]
        with open(path, "w") as fh:
            if provenance is not None:
                fh.write("# " + json.dumps(provenance, sort_keys=True) + "\n")
            fh.write(",".join(header) + "\n")
            for r in self._records:
                contribs = r.contributions if r.contributions is not None else (float("nan"),) * n_contrib
                row = [r.iteration, r.reward_mean, r.reward_std, r.snd, r.hse, r.wind, *contribs]
                fh.write(",".join(repr(float(v)) for v in row) + "\n")

    def to_json_dict(self, provenance: dict | None = None) -> dict:
        payload = {
            "seed": self.seed,
            "mode": self.mode,
            "n_agents": self.n_agents,
            "records": [
                {
                    "iteration": r.iteration,
                    "reward_mean": r.reward_mean,
                    "reward_std": r.reward_std,
                    "snd": None if math.isnan(r.snd) else r.snd,
                    "hse": None if math.isnan(r.hse) else r.hse,
                    "contributions": list(r.contributions) if r.contributions else None,
                    "wind": r.wind,
                }
                for r in self._records
            ],
        }
        if provenance is not None:
            payload["provenance"] = provenance
        return payload


class Adam:
    """Adam over a dict of parameter arrays."""

    def __init__(self, block, lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in block.items()}
        self.v = {k: np.zeros_like(v) for k, v in block.items()}

    def step(self, block, grads) -> None:
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        for k, g in grads.items():
            self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * g
            self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * g * g
            block[k] = block[k] - self.lr * (self.m[k] / c1) / (np.sqrt(self.v[k] / c2) + self.eps)


def gae_advantages(
    rewards: np.ndarray,
    values: np.ndarray,
    gamma: float,
    lam: float,
    terminal_value: float = 0.0,
) -> tuple[np.ndarray, np.ndarray]:
    """Generalized advantage estimates over ``(episodes, horizon)`` arrays.

    Episodes end at the fixed horizon, which is treated as terminal
    (bootstrap value ``terminal_value``, default 0).  Returns (advantages,
    returns) with ``returns = advantages + values``.
    """
    if rewards.shape != values.shape:
        raise ValueError("rewards and values must have equal shapes")
    E, T = rewards.shape
    adv = np.empty((E, T))
    lastgae = np.zeros(E)
    for t in reversed(range(T)):
        next_v = values[:, t + 1] if t + 1 < T else np.full(E, terminal_value)
        delta = rewards[:, t] + gamma * next_v - values[:, t]
        lastgae = delta + gamma * lam * lastgae
        adv[:, t] = lastgae
    return adv, adv + values


def surrogate_gradients(
    block,
    shape: PolicyShape,
    obs: np.ndarray,
    actions: np.ndarray,
    logp_old: np.ndarray,
    advantages: np.ndarray,
    clip_epsilon: float,
    entropy_coeff: float = 0.0,
) -> tuple[float, dict]:
    """Loss and parameter gradients of the clipped surrogate objective.

    Minimized loss: ``-mean(min(ratio * A, clip(ratio) * A)) - c * entropy``.
    When the evaluated policy equals the one that produced ``logp_old`` this
    gradient coincides with the vanilla policy-gradient estimator.
    """
    means, _, stds, cache = forward_gaussian(block, shape, obs)
    z = (actions - means) / stds
    logp = gaussian_log_prob(actions, means, stds)
    ratio = np.exp(logp - logp_old)
    unclipped = ratio * advantages
    clipped = np.clip(ratio, 1.0 - clip_epsilon, 1.0 + clip_epsilon) * advantages
    objective = np.minimum(unclipped, clipped)
    B = obs.shape[0]
    d_logp = np.where(unclipped <= clipped, unclipped, 0.0) * (-1.0 / B)
    d_means = d_logp[:, None] * z / stds
    d_log_stds = d_logp[:, None] * (z**2 - 1.0) - entropy_coeff / B
    loss = -float(np.mean(objective))
    if entropy_coeff:
        loss -= entropy_coeff * float(np.mean(np.sum(np.log(stds), axis=-1)))
    return loss, backward_gaussian(block, shape, cache, d_means, d_log_stds)


def _init_value_block(obs_dim: int, hidden: tuple[int, ...], rng: np.random.Generator):
    dims = [obs_dim, *hidden, 1]
    block = {}
    for k in range(len(dims) - 1):
        block[f"W{k}"] = rng.normal(0.0, 1.0 / math.sqrt(dims[k]), size=(dims[k], dims[k + 1]))
        block[f"b{k}"] = np.zeros(dims[k + 1])
    return block


def _value_forward(block, obs: np.ndarray, n_hidden: int):
    out, acts = _mlp_forward(block, obs, n_hidden)
    return out[:, 0], acts


def _clamp_log_std(policies: PolicySet) -> None:
    if policies.shape.stddev_mode == "global":
        for block in policies.blocks:
            np.clip(block["log_std"], LOG_STD_BOUNDS[0], LOG_STD_BOUNDS[1], out=block["log_std"])


def _ppo_update(policies, value_blocks, policy_opts, value_opts, batch, config, rng) -> dict:
    E, T, n = batch.episodes, batch.horizon, batch.n_agents
    shape = policies.shape
    n_hidden = len(shape.hidden)

    per_agent = []
    for a in range(n):
        obs = batch.observations[:, :, a, :].reshape(E * T, -1)
        act = batch.actions[:, :, a, :].reshape(E * T, -1)
        vblock = value_blocks[0] if policies.mode == "homogeneous" else value_blocks[a]
        values, _ = _value_forward(vblock, obs, n_hidden)
        adv, ret = gae_advantages(
            batch.rewards[:, :, a], values.reshape(E, T), config.gamma, config.gae_lambda
        )
        means, _, stds, _ = forward_gaussian(policies.block(a), shape, obs)
        logp_old = gaussian_log_prob(act, means, stds)
        per_agent.append((obs, act, logp_old, adv.reshape(-1), ret.reshape(-1)))

    if policies.mode == "homogeneous":
        datasets = [tuple(np.concatenate(parts, axis=0) for parts in zip(*per_agent))]
        trained = [(policies.blocks[0], value_blocks[0], policy_opts[0], value_opts[0])]
    else:
        datasets = per_agent
        trained = [
            (policies.blocks[a], value_blocks[a], policy_opts[a], value_opts[a])
            for a in range(n)
        ]

    last_pi_loss = last_v_loss = 0.0
    for (block, vblock, popt, vopt), (obs, act, logp_old, adv, ret) in zip(trained, datasets):
        adv = (adv - adv.mean()) / (adv.std() + 1e-8)
        N = obs.shape[0]
        mb = min(config.minibatch_size, N)
        for _ in range(config.epochs):
            perm = rng.permutation(N)
            for lo in range(0, N, mb):
                idx = perm[lo : lo + mb]
                pi_loss, grads = surrogate_gradients(
                    block, shape, obs[idx], act[idx], logp_old[idx], adv[idx],
                    config.clip_epsilon, config.entropy_coeff,
                )
                popt.step(block, grads)
                v, acts = _value_forward(vblock, obs[idx], n_hidden)
                err = v - ret[idx]
                v_loss = float(np.mean(err**2))
                vgrads = _mlp_backward(vblock, acts, (2.0 / len(idx)) * err[:, None], n_hidden)
                vopt.step(vblock, vgrads)
                last_pi_loss, last_v_loss = pi_loss, v_loss
    _clamp_log_std(policies)
    return {"policy_loss": last_pi_loss, "value_loss": last_v_loss}


def _check_finite(policies, losses, iteration, log) -> None:
    for key, value in losses.items():
        if not np.isfinite(value):
            log.diverged_at = iteration
            log.divergence_reason = f"non-finite {key}"
            raise TrainingDivergedError(
                f"non-finite {key} at iteration {iteration}", iteration, log
            )
    for block in policies.blocks:
        for k, v in block.items():
            if not np.all(np.isfinite(v)):
                log.diverged_at = iteration
                log.divergence_reason = f"non-finite parameter {k}"
                raise TrainingDivergedError(
                    f"non-finite parameter {k} at iteration {iteration}", iteration, log
                )


def train(
    env_factory, policies: PolicySet, config: TrainerConfig, checkpoint_dir=None
) -> TrainingLog:
    """Run the full training loop and return the per-iteration log.

    ``env_factory`` may be an environment instance or a zero-argument
    callable producing one.  Diversity is measured on fresh evaluation
    batches (sampled actions) drawn from a seed stream decoupled from the
    training batches; homogeneous runs therefore log SND = 0 exactly.
    With ``checkpoint_every`` set, periodic checkpoints are written into
    ``checkpoint_dir`` as ``checkpoint_it<N>.json``.
    """
    env = env_factory() if callable(env_factory) else env_factory
    if env.n_agents != policies.n_agents:
        raise ValueError("environment and policy set disagree on the number of agents")
    if env.obs_dim != policies.shape.obs_dim:
        raise ValueError(
            f"environment observations have dim {env.obs_dim}, policies expect {policies.shape.obs_dim}"
        )
    if env.action_dim != policies.shape.action_dim:
        raise ValueError("environment and policy set disagree on the action dimension")

    n = policies.n_agents
    n_blocks = 1 if policies.mode == "homogeneous" else n
    value_rngs = np.random.SeedSequence(derive_seed(config.seed, "value-init")).spawn(n_blocks)
    value_blocks = [
        _init_value_block(env.obs_dim, policies.shape.hidden, np.random.default_rng(ss))
        for ss in value_rngs
    ]
    policy_opts = [Adam(b, config.learning_rate) for b in policies.blocks]
    value_opts = [Adam(b, config.learning_rate) for b in value_blocks]

    if config.checkpoint_every > 0 and checkpoint_dir is None:
        raise ValueError("checkpoint_every needs a checkpoint_dir")
    schedule = config.wind_schedule
    if schedule is None:
        schedule = getattr(env, "schedule", None)

    log = TrainingLog(config.seed, policies.mode, n)
    last_matrix = None
    start = time.perf_counter()
    for it in range(config.iterations):
        if schedule is not None and hasattr(env, "set_wind"):
            env.set_wind(schedule.magnitude_at(it))
        wind = float(getattr(env, "wind", 0.0))

        batch = collect_batch(
            env, policies, config.episodes_per_iteration, seed=derive_seed(config.seed, "collect", it)
        )
        update_rng = np.random.default_rng(derive_seed(config.seed, "update", it))
        losses = _ppo_update(policies, value_blocks, policy_opts, value_opts, batch, config, update_rng)

        measure = (it % config.measure_every == 0) or (it == config.iterations - 1)
        snd_v = hse_v = float("nan")
        contribs = None
        if measure or config.diversity_target is not None:
            eval_batch = collect_batch(
                env, policies, config.eval_episodes, seed=derive_seed(config.seed, "eval", it)
            )
            if config.diversity_target is not None:
                weight = config.diversity_target.weight_at(it, config.iterations)
                control_mod.apply_diversity_penalty(
                    policies, policy_opts, eval_batch.support(), config.diversity_target, weight
                )
            if measure:
                D = distance_matrix(policies, eval_batch, kind=config.distance_kind)
                last_matrix = D
                snd_v = snd(D)
                hse_v = hse(D)
                contribs = tuple(float(c) for c in agent_contributions(D))

        ep_returns = batch.rewards.sum(axis=1).mean(axis=1)  # per-episode team return
        record = TrainingRecord(
            iteration=it,
            reward_mean=float(ep_returns.mean()),
            reward_std=float(ep_returns.std()),
            snd=snd_v,
            hse=hse_v,
            contributions=contribs,
            wind=wind,
            elapsed_s=time.perf_counter() - start,
        )
        log.append(record)
        _check_finite(policies, losses, it, log)
        if config.checkpoint_every > 0 and (it + 1) % config.checkpoint_every == 0:
            policies.save(Path(checkpoint_dir) / f"checkpoint_it{it + 1}.json")
    log.final_matrix = last_matrix
    return log


def train_multi_seed(
    env_factory: Callable[[], object],
    policy_factory: Callable[[int], PolicySet],
    config: TrainerConfig,
    seeds,
) -> list[TrainingLog]:
    """Independent training runs, one per seed."""
    logs = []
    for seed in seeds:
        cfg = dataclasses.replace(config, seed=int(seed))
        logs.append(train(env_factory(), policy_factory(int(seed)), cfg))
    return logs


@dataclass
class WindExperimentConfig:
    schedule: WindSchedule
    trainer: TrainerConfig
    seeds: tuple[int, ...] = (0,)
    horizon: int = 100
    hidden: tuple[int, ...] = (32, 32)
    wind_reward_coeff: float = 2.0
    # heterogeneous agents may start from one shared block so that measured
    # diversity reflects task-driven divergence only; independent init (the
    # default) breaks the role symmetry faster
    shared_init: bool = False

    def __post_init__(self) -> None:
        phases = self.schedule.phases
        if len(phases) != 4:
            raise ValueError("wind experiment needs exactly four phases (off/on/off/on)")
        mags = [m for _, _, m in phases]
        if not (mags[0] == 0.0 and mags[1] > 0.0 and mags[2] == 0.0 and mags[3] > 0.0):
            raise ValueError("phase magnitudes must follow off/on/off/on")
        for (_, e1, _), (s2, _, _) in zip(phases, phases[1:]):
            if e1 != s2:
                raise ValueError("wind phases must be contiguous")
        if phases[0][0] != 0:
            raise ValueError("first phase must start at iteration 0")
        if self.trainer.iterations < self.schedule.end:
            raise ValueError("trainer iterations must cover the wind schedule")


def wind_resilience_experiment(config: WindExperimentConfig) -> dict[str, list[TrainingLog]]:
    """Homogeneous and heterogeneous flocking runs over an off/on/off/on wind schedule."""
    results: dict[str, list[TrainingLog]] = {}
    for mode in ("homogeneous", "heterogeneous"):
        logs = []
        for seed in config.seeds:
            env = flocking_wind_env(
                schedule=config.schedule,
                horizon=config.horizon,
                wind_reward_coeff=config.wind_reward_coeff,
            )
            shape = PolicyShape(
                env.obs_dim, env.action_dim, hidden=config.hidden, mean_bound=env.max_speed
            )
            init_seed = derive_seed(seed, mode)
            agent_seeds = None
            if mode == "heterogeneous" and config.shared_init:
                agent_seeds = [init_seed] * env.n_agents
            policies = PolicySet.initialize(
                mode, env.n_agents, shape, seed=init_seed, agent_seeds=agent_seeds
            )
            cfg = dataclasses.replace(config.trainer, seed=int(seed), wind_schedule=config.schedule)
            logs.append(train(env, policies, cfg))
        results[mode] = logs
    return results
