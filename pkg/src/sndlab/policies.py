"""Parametric stochastic Gaussian policies with shared or per-agent parameters.

Each policy is a small tanh MLP mapping an observation to the mean of a
diagonal Gaussian over actions; the stddev is either a state-independent
learnable log-stddev per action dimension (default) or an extra network
output head.  Forward and reverse passes are written out explicitly in numpy
so log-density gradients are analytic and cheap to verify against finite
differences.

A :class:`PolicySet` holds one parameter block per agent (heterogeneous) or
a single shared block (homogeneous).  Evaluation is read-only and
thread-safe; updates happen in the trainer between evaluation phases.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .distributions import STD_FLOOR, DiagonalGaussian

CHECKPOINT_FORMAT = "sndlab-policy"
CHECKPOINT_VERSION = 1

MODES = ("homogeneous", "heterogeneous")
STDDEV_MODES = ("global", "network")

_LOG_2PI = math.log(2.0 * math.pi)

Block = dict[str, np.ndarray]


@dataclass(frozen=True)
class PolicyShape:
    """Network shape descriptor shared by every block of a policy set.

    ``mean_bound`` optionally squashes the mean head to (-bound, bound) via a
    scaled tanh (slope 1 at zero).  Environments clip actions to a box, which
    makes reward indifferent to means beyond it; an unbounded linear head then
    drifts outward indefinitely under on-policy updates, so trained policies
    use a bound matching the env's action range.  Scripted or analytic policy
    sets keep the default unbounded linear head.
    """

    obs_dim: int
    action_dim: int
    hidden: tuple[int, ...] = (32, 32)
    stddev_mode: str = "global"
    init_log_std: float = math.log(0.6)
    mean_bound: float | None = None

    def __post_init__(self) -> None:
        if self.obs_dim < 1 or self.action_dim < 1:
            raise ValueError("obs_dim and action_dim must be >= 1")
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        if any(h < 1 for h in self.hidden):
            raise ValueError("hidden widths must be >= 1")
        if self.stddev_mode not in STDDEV_MODES:
            raise ValueError(f"stddev_mode must be one of {STDDEV_MODES}")
        if self.mean_bound is not None and self.mean_bound <= 0.0:
            raise ValueError("mean_bound must be positive")

    @property
    def out_dim(self) -> int:
        return self.action_dim if self.stddev_mode == "global" else 2 * self.action_dim

    @property
    def n_layers(self) -> int:
        return len(self.hidden) + 1


def init_block(shape: PolicyShape, rng: np.random.Generator) -> Block:
    """Fan-in Gaussian init; the output head is scaled down for gentle starts."""
    dims = [shape.obs_dim, *shape.hidden, shape.out_dim]
    params: Block = {}
    last = len(dims) - 2
    for k in range(len(dims) - 1):
        scale = 1.0 / math.sqrt(dims[k])
        if k == last:
            scale *= 0.1
        params[f"W{k}"] = rng.normal(0.0, scale, size=(dims[k], dims[k + 1]))
        params[f"b{k}"] = np.zeros(dims[k + 1])
    if shape.stddev_mode == "global":
        params["log_std"] = np.full(shape.action_dim, shape.init_log_std)
    else:
        params[f"b{last}"][shape.action_dim :] = shape.init_log_std
    return params


def _mlp_forward(block: Block, x: np.ndarray, n_hidden: int) -> tuple[np.ndarray, list[np.ndarray]]:
    acts = [x]
    h = x
    for k in range(n_hidden):
        h = np.tanh(h @ block[f"W{k}"] + block[f"b{k}"])
        acts.append(h)
    out = h @ block[f"W{n_hidden}"] + block[f"b{n_hidden}"]
    return out, acts


def _mlp_backward(
    block: Block, acts: list[np.ndarray], d_out: np.ndarray, n_hidden: int
) -> Block:
    grads: Block = {}
    grads[f"W{n_hidden}"] = acts[-1].T @ d_out
    grads[f"b{n_hidden}"] = d_out.sum(axis=0)
    dh = d_out @ block[f"W{n_hidden}"].T
    for k in reversed(range(n_hidden)):
        dz = dh * (1.0 - acts[k + 1] ** 2)
        grads[f"W{k}"] = acts[k].T @ dz
        grads[f"b{k}"] = dz.sum(axis=0)
        dh = dz @ block[f"W{k}"].T
    return grads


def forward_gaussian(
    block: Block, shape: PolicyShape, obs: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray, tuple]:
    """Batched forward pass: returns (means, log_stds, stds, cache)."""
    x = np.asarray(obs, dtype=float)
    if x.ndim != 2 or x.shape[1] != shape.obs_dim:
        raise ValueError(
            f"expected observations of shape (batch, {shape.obs_dim}), got {x.shape}"
        )
    out, acts = _mlp_forward(block, x, len(shape.hidden))
    if shape.stddev_mode == "global":
        raw_means = out
        log_stds = np.broadcast_to(block["log_std"], raw_means.shape)
    else:
        raw_means = out[:, : shape.action_dim]
        log_stds = out[:, shape.action_dim :]
    squash = None
    if shape.mean_bound is not None:
        squash = np.tanh(raw_means / shape.mean_bound)
        means = shape.mean_bound * squash
    else:
        means = raw_means
    return means, log_stds, np.exp(log_stds), (acts, squash)


def backward_gaussian(
    block: Block,
    shape: PolicyShape,
    cache: tuple,
    d_means: np.ndarray,
    d_log_stds: np.ndarray,
) -> Block:
    """Reverse pass from (d/d mean, d/d log-std) to parameter gradients."""
    acts, squash = cache
    if squash is not None:
        d_means = d_means * (1.0 - squash**2)
    if shape.stddev_mode == "global":
        grads = _mlp_backward(block, acts, d_means, len(shape.hidden))
        grads["log_std"] = d_log_stds.sum(axis=0)
    else:
        d_out = np.concatenate([d_means, d_log_stds], axis=1)
        grads = _mlp_backward(block, acts, d_out, len(shape.hidden))
    return grads


def gaussian_log_prob(actions: np.ndarray, means: np.ndarray, stds: np.ndarray) -> np.ndarray:
    z = (actions - means) / stds
    return (
        -0.5 * np.sum(z**2, axis=-1)
        - np.sum(np.log(stds), axis=-1)
        - 0.5 * actions.shape[-1] * _LOG_2PI
    )


def weighted_logp_grads(
    block: Block,
    shape: PolicyShape,
    obs: np.ndarray,
    actions: np.ndarray,
    weights: np.ndarray,
) -> tuple[np.ndarray, Block]:
    """Log-probs and the gradient of ``sum_b weights[b] * logp[b]``.

    This is the single primitive both the policy-gradient update and the
    finite-difference tests reduce to.
    """
    means, _, stds, cache = forward_gaussian(block, shape, obs)
    z = (actions - means) / stds
    logp = gaussian_log_prob(actions, means, stds)
    w = np.asarray(weights, dtype=float)[:, None]
    d_means = w * z / stds
    d_log_stds = w * (z**2 - 1.0)
    return logp, backward_gaussian(block, shape, cache, d_means, d_log_stds)


def _copy_block(block: Block) -> Block:
    return {k: v.copy() for k, v in block.items()}


class PolicySet:
    """n agent policies: a shared parameter block or one block per agent."""

    def __init__(self, mode: str, n_agents: int, shape: PolicyShape, blocks: list[Block]):
        if mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if n_agents < 1:
            raise ValueError("need at least one agent")
        expected = 1 if mode == "homogeneous" else n_agents
        if len(blocks) != expected:
            raise ValueError(f"{mode} mode needs {expected} parameter block(s), got {len(blocks)}")
        self.mode = mode
        self.n_agents = n_agents
        self.shape = shape
        self.blocks = blocks

    @classmethod
    def initialize(
        cls,
        mode: str,
        n_agents: int,
        shape: PolicyShape,
        seed: int,
        agent_seeds: list[int] | None = None,
    ) -> "PolicySet":
        """Fresh parameter blocks.

        Heterogeneous blocks get independent streams derived from ``seed``;
        pass identical ``agent_seeds`` to make freshly initialized agents
        coincide (useful to start heterogeneous training from a shared
        initialization).
        """
        if mode == "homogeneous":
            rng = np.random.default_rng(np.random.SeedSequence(seed))
            blocks = [init_block(shape, rng)]
        else:
            if agent_seeds is None:
                children = np.random.SeedSequence(seed).spawn(n_agents)
                rngs = [np.random.default_rng(ss) for ss in children]
            else:
                if len(agent_seeds) != n_agents:
                    raise ValueError("need one agent seed per agent")
                rngs = [np.random.default_rng(np.random.SeedSequence(s)) for s in agent_seeds]
            blocks = [init_block(shape, rng) for rng in rngs]
        return cls(mode, n_agents, shape, blocks)

    @classmethod
    def constant(
        cls,
        means,
        stddevs,
        obs_dim: int,
        hidden: tuple[int, ...] = (32, 32),
    ) -> "PolicySet":
        """Scripted observation-independent policies (zero weights, bias = mean)."""
        means = np.atleast_2d(np.asarray(means, dtype=float))
        n, action_dim = means.shape
        stds = np.broadcast_to(np.asarray(stddevs, dtype=float), (n, action_dim)).copy()
        if np.any(stds < STD_FLOOR):
            raise ValueError(f"stddevs must be >= {STD_FLOOR}")
        shape = PolicyShape(obs_dim, action_dim, hidden=tuple(hidden), stddev_mode="global")
        blocks = []
        for a in range(n):
            rng = np.random.default_rng(0)
            block = init_block(shape, rng)
            for k in block:
                block[k] = np.zeros_like(block[k])
            block[f"b{len(shape.hidden)}"] = means[a].copy()
            block["log_std"] = np.log(stds[a])
            blocks.append(block)
        return cls("heterogeneous", n, shape, blocks)

    def block(self, agent: int) -> Block:
        if not (0 <= agent < self.n_agents):
            raise ValueError(f"agent id {agent} out of range [0, {self.n_agents})")
        return self.blocks[0] if self.mode == "homogeneous" else self.blocks[agent]

    def evaluate_batch(self, agent: int, observations: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Means and (floored) stddevs for a batch of observations."""
        means, _, stds, _ = forward_gaussian(self.block(agent), self.shape, observations)
        return means, np.maximum(stds, STD_FLOOR)

    def evaluate(self, agent: int, observation) -> DiagonalGaussian:
        obs = np.asarray(observation, dtype=float).reshape(1, -1)
        means, stds = self.evaluate_batch(agent, obs)
        return DiagonalGaussian(means[0], stds[0])

    def log_prob_and_grad(self, agent: int, observation, action) -> tuple[float, Block]:
        """Exact log-density at ``action`` and its gradient over the agent's block."""
        obs = np.asarray(observation, dtype=float).reshape(1, -1)
        act = np.asarray(action, dtype=float).reshape(1, -1)
        if act.shape[1] != self.shape.action_dim:
            raise ValueError(
                f"expected action of dimension {self.shape.action_dim}, got {act.shape[1]}"
            )
        logp, grads = weighted_logp_grads(
            self.block(agent), self.shape, obs, act, np.ones(1)
        )
        return float(logp[0]), grads

    def copy(self) -> "PolicySet":
        return PolicySet(
            self.mode, self.n_agents, self.shape, [_copy_block(b) for b in self.blocks]
        )

    def num_params(self) -> int:
        return sum(v.size for b in self.blocks for v in b.values())

    def to_checkpoint_dict(self) -> dict:
        return {
            "format": CHECKPOINT_FORMAT,
            "version": CHECKPOINT_VERSION,
            "mode": self.mode,
            "n_agents": self.n_agents,
            "shape": asdict(self.shape),
            "blocks": [{k: v.tolist() for k, v in b.items()} for b in self.blocks],
        }

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_checkpoint_dict(), fh, sort_keys=True)

    @classmethod
    def from_checkpoint_dict(cls, data: dict) -> "PolicySet":
        if data.get("format") != CHECKPOINT_FORMAT:
            raise ValueError(f"not a policy checkpoint: format={data.get('format')!r}")
        if data.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {data.get('version')!r}")
        shape_d = dict(data["shape"])
        shape_d["hidden"] = tuple(shape_d["hidden"])
        shape = PolicyShape(**shape_d)
        blocks = [
            {k: np.asarray(v, dtype=float) for k, v in b.items()} for b in data["blocks"]
        ]
        return cls(data["mode"], data["n_agents"], shape, blocks)

    @classmethod
    def load(cls, path) -> "PolicySet":
        with open(path) as fh:
            return cls.from_checkpoint_dict(json.load(fh))
