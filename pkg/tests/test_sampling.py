"""Seeded samplers for the alignment variables and the full vectors."""

import math

import numpy as np
import pytest
from scipy import stats

from commsearch.directional import kappa_from_rho, marginal_cdf, marginal_moments
from commsearch.errors import DomainError
from commsearch.sampling import (
    RngStream,
    sample_alignment_tuple,
    sample_full_interaction,
    sample_orthogonal_uniform,
    sample_tilted_interaction,
    sample_w,
)


class TestRngStream:
    def test_same_key_same_draws(self):
        a = RngStream(11, 3).generator.random(5)
        b = RngStream(11, 3).generator.random(5)
        np.testing.assert_array_equal(a, b)

    def test_distinct_streams_differ(self):
        a = RngStream(11, 3).generator.random(5)
        b = RngStream(11, 4).generator.random(5)
        c = RngStream(11, 3, namespace=1).generator.random(5)
        assert not np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_keyed_streams(self):
        base = RngStream(5, 2)
        np.testing.assert_array_equal(base.keyed(1.5).generator.random(3), RngStream(5, 2).keyed(1.5).generator.random(3))
        assert not np.array_equal(base.keyed(1.5).generator.random(3), base.keyed(2.5).generator.random(3))

    def test_rejects_negative_seed(self):
        with pytest.raises(DomainError):
            RngStream(-1)


class TestSampleW:
    def test_uniform_mean_and_variance(self):
        """kappa = 0, d = 5: mean 0 and variance 1/5."""
        n = 100_000
        w = sample_w(0.0, 5, RngStream(1), size=n)
        assert abs(w.mean()) < 4.0 * math.sqrt(0.2 / n)
        assert w.var() == pytest.approx(0.2, rel=0.05)

    def test_concentrated_mean(self):
        d, n = 200, 10_000
        kappa = kappa_from_rho(0.6, d)
        w = sample_w(kappa, d, RngStream(2), size=n)
        assert abs(w.mean() - marginal_moments(kappa, d).mean_w) < 4.0 * w.std(ddof=1) / math.sqrt(n)

    def test_distribution_matches_cdf(self):
        n = 100_000
        w = sample_w(0.0, 4, RngStream(3), size=n)
        result = stats.kstest(w, lambda x: marginal_cdf(np.clip(x, -1.0, 1.0), 0.0, 4))
        assert result.statistic < 1.63 / math.sqrt(n) * 1.2

    def test_concentrated_distribution_matches_cdf(self):
        n = 50_000
        kappa, d = 40.0, 30
        w = sample_w(kappa, d, RngStream(4), size=n)
        result = stats.kstest(w, lambda x: marginal_cdf(np.clip(x, -1.0, 1.0), kappa, d))
        assert result.pvalue > 1e-3

    def test_scalar_and_range(self):
        value = sample_w(3.0, 10, RngStream(5))
        assert isinstance(value, float)
        assert -1.0 < value < 1.0
        draws = sample_w(1e5, 10, RngStream(6), size=1000)
        assert np.all(np.abs(draws) <= 1.0)

    def test_rejects_low_dimension(self):
        with pytest.raises(DomainError):
            sample_w(1.0, 3, RngStream(0))


class TestOrthogonalUniform:
    def test_orthogonal_to_basis_vector(self):
        m = np.zeros(10)
        m[0] = 1.0
        y = sample_orthogonal_uniform(m, RngStream(7))
        assert abs(y[0]) < 1e-12
        assert np.dot(y, y) == pytest.approx(1.0, abs=1e-12)

    def test_orthogonal_to_random_direction(self):
        rng = RngStream(8)
        m = rng.generator.standard_normal(25)
        m /= np.linalg.norm(m)
        for _ in range(100):
            y = sample_orthogonal_uniform(m, rng)
            assert abs(np.dot(m, y)) < 1e-12
            assert abs(np.linalg.norm(y) - 1.0) < 1e-12

    def test_centred(self):
        d, n = 12, 10_000
        m = np.ones(d) / math.sqrt(d)
        rng = RngStream(9)
        mean = np.mean([sample_orthogonal_uniform(m, rng) for _ in range(n)], axis=0)
        # each coordinate has variance at most 1/(d - 1)
        assert np.all(np.abs(mean) < 5.0 / math.sqrt(n * (d - 1)))

    def test_rejects_non_unit(self):
        with pytest.raises(DomainError):
            sample_orthogonal_uniform(np.array([1.0, 1.0, 0.0]), RngStream(0))


class TestAlignmentTuple:
    def test_orthogonal_parts_uniform_at_four_dimensions(self):
        x = np.concatenate([sample_alignment_tuple(0.0, 4, 3, RngStream(10, r)).x_i for r in range(20_000)])
        assert stats.kstest(x, stats.uniform(loc=-1.0, scale=2.0).cdf).pvalue > 1e-3

    def test_single_pair(self):
        sample = sample_alignment_tuple(2.0, 8, 1, RngStream(11))
        assert len(sample.pairs) == 1

    def test_deterministic(self):
        kappa = kappa_from_rho(0.5, 50)
        a = sample_alignment_tuple(kappa, 50, 10, RngStream(12, 5))
        b = sample_alignment_tuple(kappa, 50, 10, RngStream(12, 5))
        assert a.w == b.w
        assert a.w_i.tobytes() == b.w_i.tobytes()
        assert a.x_i.tobytes() == b.x_i.tobytes()

    def test_entries_in_unit_interval(self):
        sample = sample_alignment_tuple(30.0, 20, 500, RngStream(13))
        assert -1.0 <= sample.w <= 1.0
        assert np.all(np.abs(sample.w_i) <= 1.0) and np.all(np.abs(sample.x_i) <= 1.0)

    def test_orthogonal_parts_uncorrelated(self):
        n = 20_000
        pairs = np.array([sample_alignment_tuple(5.0, 10, 2, RngStream(14, r)).x_i for r in range(n)])
        corr = np.corrcoef(pairs[:, 0], pairs[:, 1])[0, 1]
        assert abs(corr) < 4.0 / math.sqrt(n)

    def test_concentration_of_fidelity(self):
        d, n = 50, 10_000
        kappa = kappa_from_rho(0.5, d)
        mean = marginal_moments(kappa, d).mean_w
        w = sample_w(kappa, d, RngStream(15), size=n)
        freq = np.mean(np.abs(w - mean) > 0.2)
        bound = 2.0 * math.exp(-(d - 3) * 0.04 / 2.0)
        assert freq <= bound + 3.0 * math.sqrt(bound * (1 - bound) / n)


class TestFullInteraction:
    def test_unit_vectors(self):
        sample = sample_full_interaction(8.0, 15, 6, RngStream(16))
        assert abs(np.linalg.norm(sample.h) - 1.0) < 1e-12
        assert abs(np.linalg.norm(sample.m) - 1.0) < 1e-12
        np.testing.assert_allclose(np.linalg.norm(sample.thetas, axis=1), 1.0, atol=1e-12)

    @pytest.mark.parametrize("kappa,d,n", [(0.0, 4, 5), (8.0, 15, 6), (300.0, 60, 20)])
    def test_decomposition_identity(self, kappa, d, n):
        """<h, theta_i> = W W_i + sqrt(1 - W^2) sqrt(1 - W_i^2) X_i."""
        sample = sample_full_interaction(kappa, d, n, RngStream(17))
        np.testing.assert_allclose(sample.alignment().utilities(), sample.utilities(), atol=1e-10)

    def test_decomposition_identity_over_many_interactions(self):
        d, n = 20, 5
        kappa = kappa_from_rho(0.5, d)
        worst = 0.0
        for r in range(1000):
            sample = sample_full_interaction(kappa, d, n, RngStream(17, r))
            worst = max(worst, float(np.max(np.abs(sample.alignment().utilities() - sample.utilities()))))
        assert worst <= 1e-10

    def test_uniform_message_is_centred(self):
        n = 10_000
        w = np.array([float(s.h @ s.m) for s in (sample_full_interaction(0.0, 6, 1, RngStream(18, r)) for r in range(n))])
        assert abs(w.mean()) < 4.0 * math.sqrt(1.0 / 6.0 / n)

    def test_tilted_recommendations(self):
        sample = sample_tilted_interaction(4.0, 12, 8, 0.3, RngStream(19))
        np.testing.assert_allclose(sample.thetas @ sample.m, 0.3, atol=1e-12)
        np.testing.assert_allclose(np.linalg.norm(sample.thetas, axis=1), 1.0, atol=1e-12)
        np.testing.assert_allclose(sample.alignment().utilities(), sample.utilities(), atol=1e-10)
