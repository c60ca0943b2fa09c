"""Rollout collection and the pairwise behavioral distance matrix.

The behavioral distance between agents ``i`` and ``j`` is the average
closed-form distance (W2 by default) between the two agents' action
distributions, evaluated on *every* agent's observation at every timestep of
a freshly collected rollout batch.  Distances are arranged in an n x n
matrix that is non-negative, hollow and symmetric by construction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .distributions import hellinger_values, wasserstein2_values

DISTANCE_KINDS = ("w2", "hellinger")

_DISTANCE_FNS: dict[str, Callable[..., np.ndarray]] = {
    "w2": wasserstein2_values,
    "hellinger": hellinger_values,
}


@dataclass(frozen=True)
class RolloutBatch:
    """Observations (and actions/rewards) from a set of full episodes.

    Arrays are shaped ``(episodes, horizon, n_agents, ...)``; every timestep
    record holds exactly one observation per agent.  Immutable after
    construction.
    """

    observations: np.ndarray  # (episodes, horizon, n_agents, obs_dim)
    actions: np.ndarray  # (episodes, horizon, n_agents, action_dim)
    rewards: np.ndarray  # (episodes, horizon, n_agents)
    seed: int | None = None

    def __post_init__(self) -> None:
        obs = np.asarray(self.observations, dtype=float)
        act = np.asarray(self.actions, dtype=float)
        rew = np.asarray(self.rewards, dtype=float)
        if obs.ndim != 4 or act.ndim != 4 or rew.ndim != 3:
            raise ValueError("observations/actions must be 4-D, rewards 3-D")
        if obs.shape[:3] != act.shape[:3] or obs.shape[:3] != rew.shape:
            raise ValueError("observation, action and reward shapes disagree")
        if obs.shape[0] < 1 or obs.shape[1] < 1:
            raise ValueError("batch must contain at least one timestep")
        for arr in (obs, act, rew):
            arr.setflags(write=False)
        object.__setattr__(self, "observations", obs)
        object.__setattr__(self, "actions", act)
        object.__setattr__(self, "rewards", rew)

    @property
    def episodes(self) -> int:
        return self.observations.shape[0]

    @property
    def horizon(self) -> int:
        return self.observations.shape[1]

    @property
    def n_agents(self) -> int:
        return self.observations.shape[2]

    @property
    def obs_dim(self) -> int:
        return self.observations.shape[3]

    @property
    def num_steps(self) -> int:
        """|B|: number of joint-observation records."""
        return self.episodes * self.horizon

    def support(self) -> np.ndarray:
        """All agents' observations flattened to ``(|B| * n, obs_dim)``."""
        return self.observations.reshape(-1, self.obs_dim)

    def concat(self, other: "RolloutBatch") -> "RolloutBatch":
        """Concatenate two batches along the episode axis."""
        if self.observations.shape[1:] != other.observations.shape[1:]:
            raise ValueError("batches have incompatible shapes")
        return RolloutBatch(
            np.concatenate([self.observations, other.observations], axis=0),
            np.concatenate([self.actions, other.actions], axis=0),
            np.concatenate([self.rewards, other.rewards], axis=0),
            seed=self.seed,
        )


@dataclass(frozen=True)
class BehavioralDistanceMatrix:
    """n x n matrix of pairwise behavioral distances.

    Construction enforces the three matrix properties: entries non-negative,
    diagonal exactly zero (hollow), and exact symmetry.
    """

    values: np.ndarray
    kind: str = "w2"
    seed: int | None = None
    episodes: int | None = None
    batch_size: int | None = None  # |B| timestep records

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 2 or vals.shape[0] != vals.shape[1]:
            raise ValueError("distance matrix must be square")
        if not np.all(np.isfinite(vals)):
            raise ValueError("distance matrix entries must be finite")
        if np.any(vals < 0.0):
            raise ValueError("distance matrix entries must be non-negative")
        if np.any(np.diag(vals) != 0.0):
            raise ValueError("distance matrix must be hollow (zero diagonal)")
        if not np.array_equal(vals, vals.T):
            raise ValueError("distance matrix must be exactly symmetric")
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "kind": self.kind,
            "seed": self.seed,
            "episodes": self.episodes,
            "batch_size": self.batch_size,
            "values": self.values.tolist(),
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "BehavioralDistanceMatrix":
        vals = np.asarray(data["values"], dtype=float)
        if "n" in data and vals.shape != (data["n"], data["n"]):
            raise ValueError("matrix shape does not match declared n")
        return cls(
            vals,
            kind=data.get("kind", "w2"),
            seed=data.get("seed"),
            episodes=data.get("episodes"),
            batch_size=data.get("batch_size"),
        )

    def save_csv(self, path, provenance: dict | None = None) -> None:
        """Write headerless n x n CSV; provenance goes into '#' comment lines."""
        with open(path, "w") as fh:
            if provenance is not None:
                fh.write("# " + json.dumps(provenance, sort_keys=True) + "\n")
            for row in self.values:
                fh.write(",".join(repr(float(v)) for v in row) + "\n")

    @classmethod
    def load_csv(cls, path, kind: str = "w2") -> "BehavioralDistanceMatrix":
        vals = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
        return cls(vals, kind=kind)

    def save_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, sort_keys=True, indent=1)

    @classmethod
    def load_json(cls, path) -> "BehavioralDistanceMatrix":
        with open(path) as fh:
            return cls.from_json_dict(json.load(fh))


def collect_batch(env, policies, episodes: int, seed: int, *, obs_noise: float = 0.0) -> RolloutBatch:
    """Roll out ``episodes`` full episodes with sampled actions.

    Deterministic given ``seed``: environment draws, action sampling and
    (optional) observation noise use independent streams spawned from it.
    ``obs_noise`` adds per-component U(-delta, delta) noise to the policy
    input only (recorded observations stay clean); used by the robustness
    sweep.
    """
    if episodes < 1:
        raise ValueError("episodes must be >= 1")
    if env.horizon < 1:
        raise ValueError("episode horizon must be positive")
    if env.n_agents != policies.n_agents:
        raise ValueError(
            f"agent count mismatch: env has {env.n_agents}, policies have {policies.n_agents}"
        )
    if obs_noise < 0.0:
        raise ValueError("obs_noise must be non-negative")
    env_ss, act_ss, noise_ss = np.random.SeedSequence(seed).spawn(3)
    env_rng = np.random.default_rng(env_ss)
    act_rng = np.random.default_rng(act_ss)
    noise_rng = np.random.default_rng(noise_ss)

    n, act_dim = env.n_agents, env.action_dim
    obs = env.reset_batch(episodes, env_rng)
    obs_rec = np.empty((episodes, env.horizon, n, env.obs_dim))
    act_rec = np.empty((episodes, env.horizon, n, act_dim))
    rew_rec = np.empty((episodes, env.horizon, n))
    for t in range(env.horizon):
        obs_rec[:, t] = obs
        policy_in = obs
        if obs_noise > 0.0:
            policy_in = obs + noise_rng.uniform(-obs_noise, obs_noise, size=obs.shape)
        actions = np.empty((episodes, n, act_dim))
        for a in range(n):
            means, stds = policies.evaluate_batch(a, policy_in[:, a, :])
            actions[:, a, :] = means + stds * act_rng.standard_normal(means.shape)
        act_rec[:, t] = actions
        obs, rewards = env.step_batch(actions)
        rew_rec[:, t] = rewards
    return RolloutBatch(obs_rec, act_rec, rew_rec, seed=seed)


def _check_kind(kind: str) -> Callable[..., np.ndarray]:
    if kind not in _DISTANCE_FNS:
        raise ValueError(f"unknown distance kind {kind!r}, expected one of {DISTANCE_KINDS}")
    return _DISTANCE_FNS[kind]


def pairwise_distance(i: int, j: int, policies, batch: RolloutBatch, kind: str = "w2") -> float:
    """Average distance between agents i and j over the whole batch support.

    The support is every agent's observation at every timestep, so the result
    averages over ``|B| * n`` evaluation points.
    """
    dist_fn = _check_kind(kind)
    n = batch.n_agents
    if not (0 <= i < n and 0 <= j < n):
        raise ValueError(f"agent ids must be in [0, {n}), got ({i}, {j})")
    support = batch.support()
    mi, si = policies.evaluate_batch(i, support)
    mj, sj = policies.evaluate_batch(j, support)
    return float(np.mean(dist_fn(mi, si, mj, sj)))


def distance_matrix(policies, batch: RolloutBatch, kind: str = "w2") -> BehavioralDistanceMatrix:
    """Full behavioral distance matrix; each unordered pair computed once."""
    dist_fn = _check_kind(kind)
    n = batch.n_agents
    support = batch.support()
    outputs = [policies.evaluate_batch(a, support) for a in range(n)]
    vals = np.zeros((n, n))
    for i in range(n):
        mi, si = outputs[i]
        for j in range(i + 1, n):
            mj, sj = outputs[j]
            d = float(np.mean(dist_fn(mi, si, mj, sj)))
            vals[i, j] = d
            vals[j, i] = d
    return BehavioralDistanceMatrix(
        vals, kind=kind, seed=batch.seed, episodes=batch.episodes, batch_size=batch.num_steps
    )


def agent_contributions(D: BehavioralDistanceMatrix) -> np.ndarray:
    """Per-agent fractions of the team heterogeneity (sum to 1).

    Raw contribution of agent i is its row sum divided by n; fractions are
    the raw values normalized by their total.  A zero matrix yields the
    uniform vector (homogeneous team convention).
    """
    if D.n < 2:
        raise ValueError("contributions need at least two agents")
    raw = D.values.sum(axis=1) / D.n
    total = raw.sum()
    if total == 0.0:
        return np.full(D.n, 1.0 / D.n)
    return raw / total
