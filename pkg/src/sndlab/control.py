"""Soft set-point control of measured diversity during training.

A scheduled quadratic penalty on batch-measured SND pulls the policy set
toward a desired diversity value (equality mode) or keeps it above a floor
(lower-bound mode).  The penalty is differentiated analytically through the
closed-form W2 terms evaluated on the measurement batch, so the same
parameter blocks trained by the policy-gradient loop receive the control
gradient as well.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distance import BehavioralDistanceMatrix
from .distributions import STD_FLOOR
from .metrics import snd, snd_redundancy_formula
from .policies import PolicySet, backward_gaussian, forward_gaussian

TARGET_MODES = ("equality", "lower_bound")


@dataclass(frozen=True)
class DiversityTarget:
    """Desired diversity set-point and penalty weight schedule.

    ``weight`` ramps up linearly over the first ``warmup_fraction`` of
    training so the penalty does not fight early exploration.
    """

    mode: str
    value: float
    weight: float = 1.0
    warmup_fraction: float = 0.1
    gradient_steps: int = 1

    def __post_init__(self) -> None:
        if self.mode not in TARGET_MODES:
            raise ValueError(f"mode must be one of {TARGET_MODES}")
        if self.value < 0.0:
            raise ValueError("target diversity must be non-negative")
        if self.weight < 0.0:
            raise ValueError("penalty weight must be non-negative")
        if not (0.0 <= self.warmup_fraction <= 1.0):
            raise ValueError("warmup_fraction must be in [0, 1]")
        if self.gradient_steps < 1:
            raise ValueError("gradient_steps must be >= 1")

    def weight_at(self, iteration: int, total_iterations: int) -> float:
        warmup = self.warmup_fraction * total_iterations
        if warmup <= 0:
            return self.weight
        return self.weight * min(1.0, iteration / warmup)

    def gap(self, snd_value: float) -> float:
        if self.mode == "equality":
            return snd_value - self.value
        return -max(0.0, self.value - snd_value)


def diversity_penalty(D: BehavioralDistanceMatrix, target: DiversityTarget) -> float:
    """Quadratic set-point penalty of a measured distance matrix.

    Equality mode: ``(snd - target)^2``; lower-bound mode:
    ``max(0, target - snd)^2`` (zero when the constraint is slack).
    """
    if D.n < 2:
        raise ValueError("diversity penalty needs at least two agents")
    return target.gap(snd(D)) ** 2


def optimal_snd_for_clusters(x: float, n: int, n_c: int) -> float:
    """Task-structure-derived control target: SND of n_c ideal clusters at distance x."""
    return snd_redundancy_formula(x, n, n_c)


def penalty_gradients(
    policies: PolicySet, support: np.ndarray, target: DiversityTarget
) -> tuple[float, list[dict] | None]:
    """Penalty value and its gradient per parameter block on a fixed support.

    SND here is the mean pairwise W2 between agents' outputs averaged over the
    support observations; the gradient flows through means and stddevs into
    every block.  Returns ``(penalty, None)`` when the gradient vanishes
    (slack lower bound, or all pairs exactly coincident).
    """
    n = policies.n_agents
    if n < 2:
        raise ValueError("diversity penalty needs at least two agents")
    shape = policies.shape
    outs = [forward_gaussian(policies.block(a), shape, support) for a in range(n)]
    means = np.stack([o[0] for o in outs])  # (n, S, ad)
    stds = np.stack([o[2] for o in outs])

    S = support.shape[0]
    n_pairs = n * (n - 1) // 2
    w2 = np.zeros((n, n, S))
    for i in range(n):
        for j in range(i + 1, n):
            d2 = np.sum((means[i] - means[j]) ** 2 + (stds[i] - stds[j]) ** 2, axis=-1)
            w2[i, j] = w2[j, i] = np.sqrt(d2)
    snd_value = float(np.sum(np.triu(w2.mean(axis=-1), k=1)) / n_pairs)
    gap = target.gap(snd_value)
    penalty = gap**2
    if gap == 0.0:
        return penalty, None

    # d penalty / d W2_{ij,s} for each sample of each unordered pair
    coeff = 2.0 * gap / (n_pairs * S)
    safe = np.maximum(w2, STD_FLOOR * 1e-3)
    grads = []
    for i in range(n):
        inv = coeff / safe[i]  # (n, S); row i vs every j
        inv[i] = 0.0
        inv = np.where(w2[i] > 0.0, inv, 0.0)
        d_means = np.sum(inv[:, :, None] * (means[i][None] - means), axis=0)
        d_stds = np.sum(inv[:, :, None] * (stds[i][None] - stds), axis=0)
        d_log_stds = d_stds * stds[i]
        grads.append(backward_gaussian(policies.block(i), shape, outs[i][3], d_means, d_log_stds))

    if policies.mode == "homogeneous":
        # single shared block accumulates every agent's contribution (all zero anyway,
        # since coincident outputs give W2 = 0 and masked gradients)
        total = grads[0]
        for g in grads[1:]:
            for k in g:
                total[k] = total[k] + g[k]
        return penalty, [total]
    return penalty, grads


def apply_diversity_penalty(
    policies: PolicySet, optimizers, support: np.ndarray, target: DiversityTarget, weight: float
) -> float:
    """Take ``target.gradient_steps`` penalty gradient steps; returns the last penalty."""
    penalty = 0.0
    for _ in range(target.gradient_steps):
        penalty, grads = penalty_gradients(policies, support, target)
        if grads is None or weight == 0.0:
            break
        for opt, block, g in zip(optimizers, policies.blocks, grads):
            opt.step(block, {k: weight * v for k, v in g.items()})
    return penalty
