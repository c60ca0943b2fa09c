import numpy as np
import pytest

from sndlab.analysis import (
    paired_recovery_times,
    SampleSummary,
    aggregate_seeds,
    noise_robustness_sweep,
    recovery_time,
    regularized_incomplete_beta,
    student_t_two_sided_p,
    welch_t_test,
)
from sndlab.distance import collect_batch
from sndlab.envs import goal_navigation_env
from sndlab.policies import PolicySet, PolicyShape

# Classic two-sample worked example (unequal sizes).  Oracle values frozen
# from an independent statistical computation (scipy.stats.ttest_ind with
# equal_var=False plus the Welch-Satterthwaite formula):
# t = -2.8692682569, df = 27.9805352510, p = 0.0077446185.
SAMPLE_A = (27.5, 21, 19, 23.6, 17, 17.9, 16.9, 20.1, 21.9, 22.6, 23.1, 19.6, 19, 21.7, 21.4)
SAMPLE_B = (27.1, 22, 20.8, 23.4, 23.4, 23.5, 25.8, 22, 24.8, 20.2, 21.9, 22.1,
            22.9, 30.5, 24.3, 23.8, 20.4, 23.8, 22.8)
ORACLE_T = -2.8692682569080312
ORACLE_DF = 27.980535250961363
ORACLE_P = 0.007744618460272966

# Frozen scipy.special.betainc values for the local incomplete-beta check.
BETAINC_CASES = [
    (0.5, 0.5, 0.25, 0.33333333333333337),
    (2.0, 3.0, 0.5, 0.6875),
    (5.0, 1.5, 0.8, 0.5055606488152468),
    (12.25, 0.5, 0.9, 0.11172410203191475),
    (0.5, 12.25, 0.1, 0.8882758979680854),
]


class TestIncompleteBeta:
    def test_boundaries(self):
        assert regularized_incomplete_beta(2.0, 3.0, 0.0) == 0.0
        assert regularized_incomplete_beta(2.0, 3.0, 1.0) == 1.0

    @pytest.mark.parametrize("a,b,x,expected", BETAINC_CASES)
    def test_frozen_values(self, a, b, x, expected):
        assert regularized_incomplete_beta(a, b, x) == pytest.approx(expected, abs=1e-10)

    def test_invalid_arguments(self):
        with pytest.raises(ValueError):
            regularized_incomplete_beta(-1.0, 1.0, 0.5)
        with pytest.raises(ValueError):
            regularized_incomplete_beta(1.0, 1.0, 1.5)


class TestStudentT:
    def test_t_zero_gives_p_one(self):
        assert student_t_two_sided_p(0.0, 10.0) == pytest.approx(1.0)

    def test_frozen_tail_values(self):
        # scipy.stats.t.sf cross-checks, two-sided
        assert student_t_two_sided_p(2.22, 24.5) == pytest.approx(0.03591278362549873, abs=1e-10)
        assert student_t_two_sided_p(1.0, 1.0) == pytest.approx(0.5, abs=1e-10)
        assert student_t_two_sided_p(-3.0, 7.0) == pytest.approx(0.019942126131992522, abs=1e-10)


class TestWelch:
    def test_textbook_case(self):
        res = welch_t_test(SampleSummary.from_values(SAMPLE_A), SampleSummary.from_values(SAMPLE_B))
        assert abs(res.t - ORACLE_T) < 0.01
        assert abs(res.df - ORACLE_DF) < 0.1
        assert res.p_value == pytest.approx(ORACLE_P, abs=1e-9)

    def test_identical_samples(self):
        s = SampleSummary.from_values([1.0, 2.0, 3.0, 4.0])
        res = welch_t_test(s, s)
        assert res.t == 0.0
        assert res.p_value == 1.0

    def test_zero_variance_equal_means_convention(self):
        a = SampleSummary(mean=2.0, std=0.0, count=5)
        b = SampleSummary(mean=2.0, std=0.0, count=7)
        res = welch_t_test(a, b)
        assert res.p_value == 1.0
        assert res.t == 0.0

    def test_zero_variance_different_means(self):
        a = SampleSummary(mean=3.0, std=0.0, count=5)
        b = SampleSummary(mean=2.0, std=0.0, count=5)
        res = welch_t_test(a, b)
        assert res.p_value == 0.0
        assert np.isinf(res.t)

    def test_antisymmetric_in_t_invariant_p(self):
        a = SampleSummary.from_values(SAMPLE_A)
        b = SampleSummary.from_values(SAMPLE_B)
        r1, r2 = welch_t_test(a, b), welch_t_test(b, a)
        assert r1.t == pytest.approx(-r2.t)
        assert r1.p_value == pytest.approx(r2.p_value)
        assert r1.df == pytest.approx(r2.df)

    def test_reduces_to_student_when_balanced(self):
        rng = np.random.default_rng(0)
        a = SampleSummary.from_values(rng.normal(0, 1.0, 12))
        b = SampleSummary.from_values(rng.normal(0.5, 1.0, 12))
        # equalize variances exactly
        b = SampleSummary(mean=b.mean, std=a.std, count=a.count)
        res = welch_t_test(a, b)
        assert res.df == pytest.approx(a.count + b.count - 2, abs=1e-9)

    def test_count_one_rejected(self):
        with pytest.raises(ValueError):
            SampleSummary.from_values([1.0])


class TestAggregateSeeds:
    def _mini_log(self, values):
        from sndlab.training import TrainingLog, TrainingRecord

        log = TrainingLog(seed=0, mode="heterogeneous", n_agents=2)
        for i, v in enumerate(values):
            log.append(TrainingRecord(i, v, 0.0, v / 2, v / 3, None, 0.0, 0.0))
        return log

    def test_single_log_zero_std(self):
        agg = aggregate_seeds([self._mini_log([1.0, 2.0, 3.0])])
        assert agg.count == 1
        assert np.array_equal(agg.mean["reward_mean"], [1.0, 2.0, 3.0])
        assert np.all(agg.std["reward_mean"] == 0.0)

    def test_identical_logs_zero_std(self):
        logs = [self._mini_log([1.0, 2.0]) for _ in range(3)]
        agg = aggregate_seeds(logs)
        assert np.all(agg.std["reward_mean"] == 0.0)
        assert np.array_equal(agg.mean["snd"], [0.5, 1.0])

    def test_mismatched_lengths_rejected(self):
        with pytest.raises(ValueError):
            aggregate_seeds([self._mini_log([1.0]), self._mini_log([1.0, 2.0])])


class TestNoiseSweep:
    def _setup(self):
        env = goal_navigation_env(2, [0, 1], horizon=10)
        shape = PolicyShape(env.obs_dim, env.action_dim, hidden=(8, 8))
        ps = PolicySet.initialize("heterogeneous", 2, shape, seed=0)
        return env, ps

    def test_zero_delta_matches_clean_eval(self):
        env, ps = self._setup()
        rows = noise_robustness_sweep(ps, env, [0.0], episodes=4, seed=3)
        clean = collect_batch(env, ps, 4, seed=3)
        clean_returns = clean.rewards.sum(axis=1).mean(axis=1)
        assert rows[0].reward_mean == float(clean_returns.mean())

    def test_ten_point_grid(self):
        env, ps = self._setup()
        deltas = np.linspace(0.0, 2.0, 10)
        rows = noise_robustness_sweep(ps, env, deltas, episodes=2, seed=0)
        assert len(rows) == 10
        assert rows[0].p_value is None

    def test_negative_delta_rejected(self):
        env, ps = self._setup()
        with pytest.raises(ValueError):
            noise_robustness_sweep(ps, env, [-0.1], episodes=2, seed=0)

    def test_baseline_produces_p_values(self):
        env, ps = self._setup()
        shape = PolicyShape(env.obs_dim, env.action_dim, hidden=(8, 8))
        other = PolicySet.initialize("heterogeneous", 2, shape, seed=9)
        rows = noise_robustness_sweep(ps, env, [0.0, 0.5], episodes=4, seed=1, baseline=other)
        assert all(r.p_value is not None and 0.0 <= r.p_value <= 1.0 for r in rows)


class TestRecoveryTime:
    def test_immediate_recovery(self):
        values = [0.0, 10.0, 10.0, 10.0]
        assert recovery_time(values, 0, 4) == 1

    def test_slow_recovery(self):
        values = [0.0, 1.0, 2.0, 5.0, 9.5, 10.0]
        assert recovery_time(values, 0, 6) == 4

    def test_no_recovery_returns_phase_length(self):
        assert recovery_time([5.0, 4.0, 3.0], 0, 3) == 3

    def test_smoothing_ignores_late_spike(self):
        # a lone spike at the end should not drag the 90% threshold up
        values = [0.0] + [8.0] * 17 + [80.0, 8.0]
        assert recovery_time(values, 0, 20, smooth=5) <= 6

    def test_negative_values_normalized(self):
        # onset at -10, peak -1: 90% of the way is -1.9
        values = [-10.0, -6.0, -2.0, -1.0]
        assert recovery_time(values, 0, 4) == 3


class TestPairedRecovery:
    def test_retained_skill_recovers_immediately(self):
        # first phase: slow climb from -10 to -3; second phase: starts at -3.5
        phase1 = np.linspace(-10.0, -3.0, 50)
        calm = np.zeros(20)
        phase2 = np.full(50, -3.5)
        phase2[5:] = -3.0
        values = np.concatenate([np.zeros(10), phase1, calm, phase2])
        r1, r2 = paired_recovery_times(values, (10, 60), (80, 130), smooth=1)
        assert r2 < r1

    def test_never_learning_scores_full_lengths(self):
        values = np.concatenate([np.zeros(10), np.full(30, -5.0), np.zeros(10), np.full(30, -5.0)])
        r1, r2 = paired_recovery_times(values, (10, 40), (50, 80), smooth=1)
        assert (r1, r2) == (30, 30)

    def test_empty_phase_rejected(self):
        with pytest.raises(ValueError):
            paired_recovery_times([1.0, 2.0], (0, 2), (2, 2))
