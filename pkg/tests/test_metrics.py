import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sndlab.distance import BehavioralDistanceMatrix
from sndlab.metrics import (
    build_dendrogram,
    cluster_matrix,
    equidistant_matrix,
    hse,
    shannon_entropy,
    snd,
    snd_redundancy_formula,
)


def matrix_from(vals):
    return BehavioralDistanceMatrix(np.asarray(vals, float))


@st.composite
def random_matrices(draw):
    n = draw(st.integers(2, 7))
    vals = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            vals[i, j] = vals[j, i] = draw(st.floats(0.0, 10.0, allow_nan=False))
    return matrix_from(vals)


class TestSnd:
    def test_all_pairs_equal_any_n(self):
        for n in range(2, 17):
            for x in (0.1, 1.0, 10.0):
                assert snd(equidistant_matrix(n, x)) == pytest.approx(x, rel=1e-13, abs=0)

    def test_two_cluster_example(self):
        # four agents in two clusters at distance 2 -> 4/3
        assert snd(cluster_matrix(4, 2, 2.0)) == pytest.approx(4.0 / 3.0, rel=1e-13)

    def test_zero_matrix(self):
        assert snd(matrix_from(np.zeros((5, 5)))) == 0.0

    def test_single_agent_rejected(self):
        with pytest.raises(ValueError):
            snd(matrix_from(np.zeros((1, 1))))

    @given(random_matrices())
    @settings(max_examples=100, deadline=None)
    def test_relabeling_invariance(self, D):
        rng = np.random.default_rng(0)
        perm = rng.permutation(D.n)
        permuted = matrix_from(D.values[np.ix_(perm, perm)])
        assert snd(permuted) == pytest.approx(snd(D), rel=1e-12)
        assert hse(permuted) == pytest.approx(hse(D), rel=1e-12, abs=1e-12)

    @given(random_matrices(), st.floats(0.0, 5.0, allow_nan=False))
    @settings(max_examples=100, deadline=None)
    def test_scaling(self, D, c):
        scaled = matrix_from(c * D.values)
        assert snd(scaled) == pytest.approx(c * snd(D), rel=1e-9, abs=1e-12)
        assert hse(scaled) == pytest.approx(c * hse(D), rel=1e-9, abs=1e-12)


class TestRedundancyFormula:
    def test_matches_property_one_when_nc_equals_n(self):
        for n in range(2, 10):
            assert snd_redundancy_formula(1.0, n, n) == pytest.approx(1.0, rel=1e-13)

    def test_decreasing_in_n(self):
        values = [snd_redundancy_formula(1.0, n, 2) for n in (2, 4, 6, 8)]
        assert values == pytest.approx([1.0, 2.0 / 3.0, 3.0 / 5.0, 4.0 / 7.0], rel=1e-13)
        assert all(b < a for a, b in zip(values, values[1:]))

    def test_increasing_in_nc(self):
        values = [snd_redundancy_formula(1.0, 12, nc) for nc in (2, 3, 4)]
        assert values == pytest.approx([6.0 / 11.0, 8.0 / 11.0, 9.0 / 11.0], rel=1e-13)
        assert all(b > a for a, b in zip(values, values[1:]))

    def test_non_divisor_rejected(self):
        with pytest.raises(ValueError):
            snd_redundancy_formula(1.0, 5, 2)

    def test_matches_snd_on_cluster_matrices(self):
        for n in range(2, 25):
            for n_c in range(1, n + 1):
                if n % n_c:
                    continue
                expected = snd_redundancy_formula(1.7, n, n_c)
                assert snd(cluster_matrix(n, n_c, 1.7)) == pytest.approx(expected, rel=1e-12, abs=1e-15)


class TestDendrogram:
    def test_two_agents(self):
        dend = build_dendrogram(matrix_from([[0.0, 1.5], [1.5, 0.0]]))
        assert dend.levels == (0.0, 1.5)
        assert dend.partitions == (((0,), (1,)), ((0, 1),))

    def test_two_clusters(self):
        dend = build_dendrogram(cluster_matrix(4, 2, 2.0))
        assert dend.levels == (0.0, 2.0)
        assert dend.partitions[0] == ((0, 1), (2, 3))
        assert dend.partitions[1] == ((0, 1, 2, 3),)

    def test_chain_uses_connectivity_not_completeness(self):
        # d(0,1)=1, d(1,2)=1, d(0,2)=2: all three co-cluster already at l=1
        D = matrix_from([[0, 1, 2], [1, 0, 1], [2, 1, 0]])
        dend = build_dendrogram(D)
        assert dend.levels == (0.0, 1.0)
        assert dend.partitions[1] == ((0, 1, 2),)

    @given(random_matrices())
    @settings(max_examples=100, deadline=None)
    def test_partitions_strictly_coarsen(self, D):
        dend = build_dendrogram(D)
        counts = [len(p) for p in dend.partitions]
        assert all(b < a for a, b in zip(counts, counts[1:]))
        assert counts[-1] == 1 or len(counts) == 1


class TestShannonEntropy:
    def test_point_mass(self):
        assert shannon_entropy([1.0]) == 0.0

    def test_fair_coin(self):
        assert shannon_entropy([0.5, 0.5]) == 1.0

    def test_uniform_four(self):
        assert shannon_entropy([0.25] * 4) == 2.0

    def test_zero_class_contributes_nothing(self):
        assert shannon_entropy([0.5, 0.5, 0.0]) == 1.0

    def test_bad_sum_rejected(self):
        with pytest.raises(ValueError):
            shannon_entropy([0.5, 0.4])

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            shannon_entropy([1.5, -0.5])


class TestHse:
    def test_two_agents_equals_distance(self):
        for d in (0.5, 1.0, 3.25):
            D = matrix_from([[0.0, d], [d, 0.0]])
            assert hse(D) == pytest.approx(d, rel=1e-13)
            assert hse(D) == pytest.approx(snd(D), rel=1e-13)

    def test_equidistant_grows_with_n_while_snd_constant(self):
        for n in (2, 3, 4, 8, 16):
            D = equidistant_matrix(n, 1.5)
            assert hse(D) == pytest.approx(1.5 * np.log2(n), rel=1e-12)
            assert snd(D) == pytest.approx(1.5, rel=1e-13)

    def test_clusters_independent_of_n(self):
        for n in (4, 8, 12, 16):
            D = cluster_matrix(n, 4, 2.0)
            assert hse(D) == pytest.approx(2.0 * np.log2(4), rel=1e-12)

    def test_zero_matrix(self):
        assert hse(matrix_from(np.zeros((4, 4)))) == 0.0

    def test_complementarity_contrast(self):
        # same cluster family: SND strictly decreases in n, HSE stays flat
        snds = [snd(cluster_matrix(n, 2, 1.0)) for n in (2, 4, 6, 8)]
        hses = [hse(cluster_matrix(n, 2, 1.0)) for n in (2, 4, 6, 8)]
        assert all(b < a for a, b in zip(snds, snds[1:]))
        assert all(h == pytest.approx(1.0, rel=1e-12) for h in hses)
