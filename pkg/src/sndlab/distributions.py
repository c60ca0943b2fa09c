"""Closed-form statistical distances between diagonal-Gaussian action distributions.

All distances operate on :class:`DiagonalGaussian` values, the per-dimension
mean/stddev distributions produced by the stochastic policies.  Covariances
are diagonal, so every distance reduces to a cheap per-dimension expression:

* ``wasserstein2``:  sqrt( sum_d (mu_p - mu_q)^2 + (sigma_p - sigma_q)^2 ) --
  a true metric (non-negative, identity, symmetric, triangle inequality).
* ``kl_divergence``: the usual Gaussian KL summed over dimensions.  It is a
  divergence, not a metric, and blows up as stddevs shrink; provided for
  diagnostics and comparison.
* ``hellinger``: bounded in [0, 1], also a metric; optional alternative
  behavioral distance.

Batched ``*_values`` variants operate on parameter arrays (reducing over the
last axis) and are used by the rollout-distance machinery and by property
tests.  Everything here is a pure function on immutable values and safe to
call concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Stddevs are floored at construction so KL and Hellinger stay finite for
# near-deterministic policies; W2 is unaffected in practice.
STD_FLOOR = 1e-6

_LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass(frozen=True)
class DiagonalGaussian:
    """A per-dimension mean/stddev action distribution.

    Invariants enforced at construction: ``means`` and ``stddevs`` are 1-D,
    equal-length (>= 1), finite, and stddevs are strictly positive (values in
    ``[0, STD_FLOOR)`` are floored, negatives rejected).
    """

    means: np.ndarray
    stddevs: np.ndarray

    def __post_init__(self) -> None:
        means = np.atleast_1d(np.asarray(self.means, dtype=float))
        stds = np.atleast_1d(np.asarray(self.stddevs, dtype=float))
        if means.ndim != 1 or stds.ndim != 1:
            raise ValueError("means and stddevs must be 1-D vectors")
        if means.shape != stds.shape:
            raise ValueError(
                f"means and stddevs must have equal length, got {means.shape} vs {stds.shape}"
            )
        if means.size < 1:
            raise ValueError("distribution must have at least one dimension")
        if not (np.all(np.isfinite(means)) and np.all(np.isfinite(stds))):
            raise ValueError("means and stddevs must be finite")
        if np.any(stds < 0.0):
            raise ValueError("stddevs must be non-negative before flooring")
        stds = np.maximum(stds, STD_FLOOR)
        means = means.copy()
        means.setflags(write=False)
        stds.setflags(write=False)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "stddevs", stds)

    @property
    def dim(self) -> int:
        return int(self.means.size)


def _check_same_dim(p: DiagonalGaussian, q: DiagonalGaussian) -> None:
    if p.dim != q.dim:
        raise ValueError(f"dimension mismatch: {p.dim} vs {q.dim}")


def wasserstein2_values(
    means_p: np.ndarray,
    stds_p: np.ndarray,
    means_q: np.ndarray,
    stds_q: np.ndarray,
) -> np.ndarray:
    """Batched W2 between diagonal Gaussians, reducing over the last axis."""
    d2 = np.sum((means_p - means_q) ** 2 + (stds_p - stds_q) ** 2, axis=-1)
    return np.sqrt(d2)


def wasserstein2(p: DiagonalGaussian, q: DiagonalGaussian) -> float:
    """Closed-form 2-Wasserstein distance between two diagonal Gaussians."""
    _check_same_dim(p, q)
    return float(wasserstein2_values(p.means, p.stddevs, q.means, q.stddevs))


def kl_divergence(p: DiagonalGaussian, q: DiagonalGaussian) -> float:
    """KL(p || q) for diagonal Gaussians, summed over dimensions.

    Asymmetric; diverges as ``q``'s stddevs shrink while the means differ,
    which is exactly why it is not used as the behavioral distance.
    """
    _check_same_dim(p, q)
    var_q = q.stddevs**2
    terms = (
        np.log(q.stddevs / p.stddevs)
        + (p.stddevs**2 + (p.means - q.means) ** 2) / (2.0 * var_q)
        - 0.5
    )
    return float(np.sum(terms))


def hellinger_values(
    means_p: np.ndarray,
    stds_p: np.ndarray,
    means_q: np.ndarray,
    stds_q: np.ndarray,
) -> np.ndarray:
    """Batched Hellinger distance, reducing over the last axis.

    Uses the product of per-dimension Bhattacharyya factors; result is in
    [0, 1] by construction.
    """
    var_sum = stds_p**2 + stds_q**2
    bc = np.sqrt(2.0 * stds_p * stds_q / var_sum) * np.exp(
        -((means_p - means_q) ** 2) / (4.0 * var_sum)
    )
    h2 = 1.0 - np.prod(bc, axis=-1)
    return np.sqrt(np.clip(h2, 0.0, 1.0))


def hellinger(p: DiagonalGaussian, q: DiagonalGaussian) -> float:
    """Hellinger distance between two diagonal Gaussians, a metric in [0, 1]."""
    _check_same_dim(p, q)
    return float(hellinger_values(p.means, p.stddevs, q.means, q.stddevs))
