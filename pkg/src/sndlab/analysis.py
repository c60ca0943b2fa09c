"""Statistical post-processing: Welch's t-test, seed aggregation, noise sweeps.

The Student-t tail probability needed by Welch's test is computed through a
local implementation of the regularized incomplete beta function (continued
fraction, modified Lentz), keeping the package free of a statistics
dependency while staying accurate to ~1e-12 against tabulated values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .distance import collect_batch
from .seeding import derive_seed


@dataclass(frozen=True)
class SampleSummary:
    """Mean/std/count summary of a sample (optionally carrying the values)."""

    mean: float
    std: float
    count: int
    values: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if self.count < 2:
            raise ValueError("need at least two observations for a variance")
        if self.std < 0.0:
            raise ValueError("standard deviation must be non-negative")

    @classmethod
    def from_values(cls, values) -> "SampleSummary":
        arr = np.asarray(values, dtype=float)
        if arr.ndim != 1 or arr.size < 2:
            raise ValueError("need a 1-D sample with at least two observations")
        return cls(float(arr.mean()), float(arr.std(ddof=1)), int(arr.size), tuple(arr.tolist()))


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta function (modified Lentz)."""
    MAXIT = 500
    EPS = 1e-15
    FPMIN = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < FPMIN:
        d = FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, MAXIT + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < FPMIN:
            d = FPMIN
        c = 1.0 + aa / c
        if abs(c) < FPMIN:
            c = FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < FPMIN:
            d = FPMIN
        c = 1.0 + aa / c
        if abs(c) < FPMIN:
            c = FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < EPS:
            return h
    raise RuntimeError("incomplete beta continued fraction did not converge")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if a <= 0.0 or b <= 0.0:
        raise ValueError("a and b must be positive")
    if not (0.0 <= x <= 1.0):
        raise ValueError("x must be in [0, 1]")
    if x == 0.0 or x == 1.0:
        return x
    ln_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def student_t_two_sided_p(t: float, df: float) -> float:
    """P(|T| >= |t|) for Student's t with ``df`` degrees of freedom."""
    if df <= 0.0:
        raise ValueError("degrees of freedom must be positive")
    if math.isinf(t):
        return 0.0
    return regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t))


class WelchResult(NamedTuple):
    t: float
    p_value: float
    df: float


def welch_t_test(a: SampleSummary, b: SampleSummary) -> WelchResult:
    """Welch's unequal-variances t-test with Welch-Satterthwaite df.

    Degenerate convention: when both variances are zero, p = 1 for equal
    means and p = 0 (infinite t) otherwise, with df = n_a + n_b - 2.
    """
    sa2 = a.std**2 / a.count
    sb2 = b.std**2 / b.count
    se2 = sa2 + sb2
    diff = a.mean - b.mean
    if se2 == 0.0:
        df = float(a.count + b.count - 2)
        if diff == 0.0:
            return WelchResult(0.0, 1.0, df)
        return WelchResult(math.copysign(math.inf, diff), 0.0, df)
    t = diff / math.sqrt(se2)
    df = se2**2 / (sa2**2 / (a.count - 1) + sb2**2 / (b.count - 1))
    return WelchResult(float(t), student_t_two_sided_p(t, df), float(df))


@dataclass(frozen=True)
class NoiseSweepRow:
    delta: float
    reward_mean: float
    reward_std: float
    p_value: float | None = None


def _episode_returns(batch) -> np.ndarray:
    return batch.rewards.sum(axis=1).mean(axis=1)


def noise_robustness_sweep(
    policies,
    env,
    deltas,
    episodes: int,
    seed: int = 0,
    baseline=None,
) -> list[NoiseSweepRow]:
    """Evaluate frozen policies under uniform observation noise U(-delta, delta).

    Noise is added to the policy input only, at test time.  The same seed is
    reused for every delta, so the delta = 0 row reproduces a clean
    evaluation exactly.  When ``baseline`` policies are given, each row also
    carries the Welch p-value comparing the two reward samples at that delta.
    """
    rows = []
    for delta in deltas:
        if delta < 0.0:
            raise ValueError("noise bounds must be non-negative")
        batch = collect_batch(env, policies, episodes, seed=seed, obs_noise=float(delta))
        returns = _episode_returns(batch)
        p_value = None
        if baseline is not None:
            base_batch = collect_batch(env, baseline, episodes, seed=seed, obs_noise=float(delta))
            result = welch_t_test(
                SampleSummary.from_values(returns),
                SampleSummary.from_values(_episode_returns(base_batch)),
            )
            p_value = result.p_value
        rows.append(
            NoiseSweepRow(float(delta), float(returns.mean()), float(returns.std(ddof=1)), p_value)
        )
    return rows


@dataclass(frozen=True)
class AggregateCurves:
    """Pointwise mean/std of logged quantities across seeds."""

    iterations: np.ndarray
    count: int
    mean: dict[str, np.ndarray]
    std: dict[str, np.ndarray]


def aggregate_seeds(logs) -> AggregateCurves:
    """Per-iteration mean and sample std across a list of training logs."""
    if not logs:
        raise ValueError("need at least one log")
    lengths = {len(log) for log in logs}
    if len(lengths) != 1:
        raise ValueError(f"logs have mismatched lengths: {sorted(lengths)}")
    columns = [log.columns() for log in logs]
    names = columns[0].keys()
    mean: dict[str, np.ndarray] = {}
    std: dict[str, np.ndarray] = {}
    for name in names:
        stacked = np.stack([c[name] for c in columns])
        mean[name] = stacked.mean(axis=0)
        std[name] = stacked.std(axis=0, ddof=1) if len(logs) > 1 else np.zeros(stacked.shape[1])
    iterations = logs[0].column("iteration")
    return AggregateCurves(iterations, len(logs), mean, std)


def recovery_time(
    values, start: int, end: int, fraction: float = 0.9, smooth: int = 1
) -> int:
    """Iterations from phase start until the value first recovers to
    ``fraction`` of the way from its phase-onset level to the phase peak.

    With ``smooth`` > 1 the series is boxcar-averaged first and the peak is
    taken as the 80th percentile of the smoothed phase, which keeps a few
    noisy spikes near the end of the phase from inflating the target level.
    Returns the phase length if the level is never reached (or the phase
    never rises above its onset).
    """
    series = np.asarray(values, dtype=float)[start:end]
    if series.size == 0:
        raise ValueError("empty phase")
    if smooth > 1:
        kernel = np.ones(smooth) / smooth
        padded = np.concatenate([np.repeat(series[0], smooth - 1), series])
        series = np.convolve(padded, kernel, mode="valid")
        peak = float(np.percentile(series, 80))
    else:
        peak = float(np.max(series))
    onset = series[0]
    if peak <= onset:
        return int(series.size)
    threshold = onset + fraction * (peak - onset)
    hits = np.nonzero(series >= threshold)[0]
    return int(hits[0]) if hits.size else int(series.size)


def paired_recovery_times(
    values, first_phase, second_phase, fraction: float = 0.9, smooth: int = 5
) -> tuple[int, int]:
    """Recovery times after two onsets of the same disturbance.

    Both phases are measured against one shared target: ``fraction`` of the
    way from the first-onset level to the best (80th-percentile smoothed)
    level achieved in either disturbed phase.  A system that retained the
    coping skill re-crosses the target almost immediately at the second
    onset, while relearning from scratch takes as long as the first time.
    Phases that never reach the target score their full length.  Smoothing
    is applied per phase so calm-phase rewards cannot bleed into the onset.
    """
    series = np.asarray(values, dtype=float)

    def smoothed_slice(phase):
        s = series[phase[0] : phase[1]]
        if s.size == 0:
            raise ValueError("empty phase")
        if smooth > 1:
            kernel = np.ones(smooth) / smooth
            padded = np.concatenate([np.repeat(s[0], smooth - 1), s])
            s = np.convolve(padded, kernel, mode="valid")
        return s

    s1 = smoothed_slice(first_phase)
    s2 = smoothed_slice(second_phase)
    onset = s1[0]
    peak = max(float(np.percentile(s1, 80)), float(np.percentile(s2, 80)))
    if peak <= onset:
        return int(s1.size), int(s2.size)
    threshold = onset + fraction * (peak - onset)

    def first_hit(s):
        hits = np.nonzero(s >= threshold)[0]
        return int(hits[0]) if hits.size else int(s.size)

    return first_hit(s1), first_hit(s2)


def evaluate_policies(policies, env, episodes: int, seed: int = 0) -> SampleSummary:
    """Clean frozen-policy evaluation; returns the per-episode return summary."""
    batch = collect_batch(env, policies, episodes, seed=derive_seed(seed, "clean-eval"))
    return SampleSummary.from_values(_episode_returns(batch))
