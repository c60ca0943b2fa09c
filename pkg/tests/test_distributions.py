import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sndlab.distributions import (
    STD_FLOOR,
    DiagonalGaussian,
    hellinger,
    kl_divergence,
    wasserstein2,
)

from _oracles import mc_wasserstein2


def gauss(means, stds):
    return DiagonalGaussian(np.asarray(means, float), np.asarray(stds, float))


@st.composite
def gaussians(draw, dim=None):
    d = dim if dim is not None else draw(st.integers(1, 4))
    floats = st.floats(-5.0, 5.0, allow_nan=False)
    pos = st.floats(0.01, 3.0, allow_nan=False)
    means = draw(st.lists(floats, min_size=d, max_size=d))
    stds = draw(st.lists(pos, min_size=d, max_size=d))
    return gauss(means, stds)


class TestDiagonalGaussian:
    def test_floor_applied(self):
        g = gauss([0.0], [0.0])
        assert g.stddevs[0] == STD_FLOOR

    def test_negative_std_rejected(self):
        with pytest.raises(ValueError):
            gauss([0.0], [-1.0])

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            gauss([0.0, 1.0], [1.0])

    def test_immutable(self):
        g = gauss([0.0], [1.0])
        with pytest.raises(ValueError):
            g.means[0] = 2.0


class TestWasserstein2:
    def test_identity(self):
        g = gauss([0.0], [1.0])
        assert wasserstein2(g, g) == 0.0

    def test_delta_limit_approaches_mean_difference(self):
        # as stddevs shrink to the floor, W2 approaches |mu_p - mu_q|
        p = gauss([0.0], [0.0])
        q = gauss([1.0], [0.0])
        assert wasserstein2(p, q) == pytest.approx(1.0, abs=1e-9)

    def test_2d_single_mean_offset(self):
        p = gauss([0.0, 0.0], [1.0, 1.0])
        q = gauss([3.0, 0.0], [1.0, 1.0])
        assert wasserstein2(p, q) == 3.0

    def test_equal_stds_reduce_to_euclidean(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            m1, m2 = rng.normal(size=3), rng.normal(size=3)
            s = rng.uniform(0.1, 2.0, size=3)
            assert wasserstein2(gauss(m1, s), gauss(m2, s)) == pytest.approx(
                np.linalg.norm(m1 - m2), rel=1e-12
            )

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            wasserstein2(gauss([0.0], [1.0]), gauss([0.0, 0.0], [1.0, 1.0]))

    def test_monte_carlo_oracle_2d(self):
        rng = np.random.default_rng(7)
        p = gauss(rng.uniform(-2, 2, 2), rng.uniform(0.3, 2.0, 2))
        q = gauss(rng.uniform(-2, 2, 2), rng.uniform(0.3, 2.0, 2))
        est = mc_wasserstein2(p, q, samples=10**5, seed=11)
        assert wasserstein2(p, q) == pytest.approx(est, rel=0.02)

    @given(gaussians(dim=2), gaussians(dim=2), gaussians(dim=2))
    @settings(max_examples=200, deadline=None)
    def test_metric_axioms(self, p, q, r):
        dpq = wasserstein2(p, q)
        assert dpq >= 0.0
        assert wasserstein2(p, p) == 0.0
        assert dpq == wasserstein2(q, p)
        assert dpq <= wasserstein2(p, r) + wasserstein2(r, q) + 1e-9

    @given(gaussians(dim=3), gaussians(dim=3), st.lists(st.floats(-10, 10), min_size=3, max_size=3))
    @settings(max_examples=100, deadline=None)
    def test_translation_covariance(self, p, q, shift):
        shift = np.asarray(shift)
        p2 = gauss(p.means + shift, p.stddevs)
        q2 = gauss(q.means + shift, q.stddevs)
        assert wasserstein2(p2, q2) == pytest.approx(wasserstein2(p, q), rel=1e-9, abs=1e-12)


class TestKL:
    def test_identity(self):
        g = gauss([0.3, -1.0], [0.5, 2.0])
        assert kl_divergence(g, g) == pytest.approx(0.0, abs=1e-15)

    def test_unit_variance_mean_shift(self):
        assert kl_divergence(gauss([0.0], [1.0]), gauss([1.0], [1.0])) == pytest.approx(0.5)

    def test_diverges_as_std_shrinks(self):
        # KL grows without bound while W2 approaches the mean difference
        values = []
        w2s = []
        for sigma in (1.0, 0.5, 0.1, 0.01, 0.001):
            p, q = gauss([0.0], [sigma]), gauss([1.0], [sigma])
            values.append(kl_divergence(p, q))
            w2s.append(wasserstein2(p, q))
        assert all(b > a for a, b in zip(values, values[1:]))
        assert values[-1] > 1e5
        assert w2s[-1] == pytest.approx(1.0, rel=1e-5)

    def test_asymmetry_witness(self):
        p, q = gauss([0.0], [1.0]), gauss([0.5], [2.0])
        assert kl_divergence(p, q) != kl_divergence(q, p)


class TestHellinger:
    def test_identity(self):
        g = gauss([1.0, 2.0], [0.7, 0.9])
        assert hellinger(g, g) == pytest.approx(0.0, abs=1e-12)

    def test_analytic_variance_case(self):
        # N(0,1) vs N(0,4): sqrt(1 - sqrt(2*1*2 / (1+4)))
        expected = np.sqrt(1.0 - np.sqrt(4.0 / 5.0))
        assert hellinger(gauss([0.0], [1.0]), gauss([0.0], [2.0])) == pytest.approx(expected)

    def test_separated_means_approach_one(self):
        assert hellinger(gauss([0.0], [1.0]), gauss([100.0], [1.0])) == pytest.approx(1.0, abs=1e-9)

    @given(gaussians(), gaussians())
    @settings(max_examples=200, deadline=None)
    def test_bounded(self, p, q):
        if p.dim != q.dim:
            return
        h = hellinger(p, q)
        assert 0.0 <= h <= 1.0
