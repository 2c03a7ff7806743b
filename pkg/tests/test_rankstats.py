import numpy as np
import pytest
from scipy import stats

from sbc.errors import IndivisibleBinning, NonFiniteInput
from sbc.models import NormalNormalSpec, make_normal_normal
from sbc.rankstats import (
    binomial_quantile,
    build_histogram,
    chi_square_uniformity,
    classify_shape,
    default_bins,
    ecdf_diff,
    ecdf_summary,
    empirical_quantile,
    quantile_bin_counts,
    rank_statistic,
    rebin,
    uniform_band,
)
from sbc.samplers import sample_exact_conjugate
from sbc.streams import RandomStream

# chi2 0.999 quantiles, frozen from scipy.stats.chi2.ppf.
CHI2_999_DOF9 = 27.877164871256568


class TestRankStatistic:
    def test_direct_count(self):
        assert rank_statistic([0.1, 0.2, 0.3], 0.25) == 2

    def test_below_all(self):
        assert rank_statistic([0.1, 0.2, 0.3], 0.05) == 0

    def test_ties_count_as_not_less(self):
        assert rank_statistic([1.0, 1.0, 1.0], 1.0) == 0

    def test_non_finite_rejected(self):
        with pytest.raises(NonFiniteInput):
            rank_statistic([0.1, np.nan], 0.5)
        with pytest.raises(NonFiniteInput):
            rank_statistic([0.1, 0.2], np.inf)

    def test_reflection_identity(self):
        # rank(v, p) + rank(-v, -p) == L whenever p is not tied with any v.
        rng = np.random.default_rng(42)
        for _ in range(200):
            L = int(rng.integers(1, 50))
            v = rng.normal(size=L)
            p = rng.normal()
            assert rank_statistic(v, p) + rank_statistic(-v, -p) == L


class TestEmpiricalQuantile:
    def test_boundaries_and_midpoint(self):
        assert empirical_quantile(0, 100) == 0.0
        assert empirical_quantile(100, 100) == 1.0
        assert empirical_quantile(50, 100) == 0.5

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            empirical_quantile(101, 100)


class TestRebin:
    def test_pairing(self):
        np.testing.assert_array_equal(rebin([0, 1, 2, 3], 3, 2), [2, 2])

    def test_point_mass_goes_to_last_bin(self):
        counts = rebin([5] * 7, 5, 6)
        np.testing.assert_array_equal(counts, [0, 0, 0, 0, 0, 7])

    def test_neighbors_share_bin(self):
        counts = rebin([0, 1], 99, 50)
        assert counts[0] == 2

    def test_indivisible_binning_message(self):
        with pytest.raises(IndivisibleBinning, match="power of 2"):
            rebin([0, 1], 99, 7)

    def test_counts_sum_to_n(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            L = 99
            ranks = rng.integers(0, L + 1, size=int(rng.integers(1, 500)))
            for B in (1, 2, 4, 5, 10, 20, 25, 50, 100):
                assert rebin(ranks, L, B).sum() == ranks.size


class TestUniformBand:
    def test_single_fair_bernoulli(self):
        assert uniform_band(1, 2) == (0, 1)

    def test_degenerate_p_equal_one(self):
        assert uniform_band(40, 1) == (40, 40)

    def test_frozen_oracle_values(self):
        # Frozen from an exact binomial CDF oracle (scipy.stats.binom.ppf).
        assert uniform_band(2000, 100) == (10, 32)
        assert uniform_band(2000, 20) == (76, 126)
        assert uniform_band(1000, 20) == (33, 69)

    def test_matches_scipy_across_grid(self):
        for N in (1, 10, 100, 2000, 5000):
            for B in (1, 2, 3, 10, 20, 100):
                lo, hi = uniform_band(N, B)
                assert lo == int(stats.binom.ppf(0.005, N, 1 / B))
                assert hi == int(stats.binom.ppf(0.995, N, 1 / B))

    def test_band_contains_mean_when_coverage_reasonable(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            N = int(rng.integers(1, 3000))
            B = int(rng.integers(1, 120))
            lo, hi = uniform_band(N, B, coverage=0.5 + 0.49 * rng.random())
            assert lo <= N / B <= hi


class TestBinomialQuantile:
    def test_against_scipy_including_large_p(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            n = int(rng.integers(1, 3000))
            p = float(rng.random())
            q = float(rng.uniform(0.001, 0.999))
            assert binomial_quantile(q, n, p) == int(stats.binom.ppf(q, n, p))

    def test_edge_probabilities(self):
        assert binomial_quantile(0.5, 10, 0.0) == 0
        assert binomial_quantile(0.5, 10, 1.0) == 10


class TestEcdf:
    def test_perfect_uniformity_diff_zero(self):
        L = 9
        ranks = np.arange(L + 1)
        s = ecdf_summary(ranks, L)
        np.testing.assert_allclose(s.values, s.expected)
        d = ecdf_diff(s)
        np.testing.assert_allclose(d.values, 0.0, atol=1e-15)

    def test_point_mass_at_zero(self):
        L = 9
        s = ecdf_summary(np.zeros(100, dtype=int), L)
        np.testing.assert_allclose(s.values, 1.0)
        d = ecdf_diff(s)
        assert d.values[0] == pytest.approx(1 - 1 / (L + 1))

    def test_final_diff_always_zero(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            ranks = rng.integers(0, 100, size=200)
            d = ecdf_diff(ecdf_summary(ranks, 99))
            assert d.values[-1] == pytest.approx(0.0)

    def test_values_nondecreasing_and_end_at_one(self):
        rng = np.random.default_rng(6)
        ranks = rng.integers(0, 100, size=500)
        s = ecdf_summary(ranks, 99)
        assert np.all(np.diff(s.values) >= 0)
        assert s.values[-1] == 1.0
        assert np.all(np.diff(s.expected) > 0)

    def test_pointwise_envelope_coverage_for_uniform_ranks(self):
        # Statistical property: about 1% of the 100 points may fall outside.
        rng = np.random.default_rng(2026)
        ranks = rng.integers(0, 100, size=2000)
        s = ecdf_summary(ranks, 99)
        inside = np.sum((s.values >= s.envelope_low) & (s.values <= s.envelope_high))
        assert inside >= 97


class TestChiSquare:
    def test_exact_uniformity(self):
        assert chi_square_uniformity([20, 20, 20, 20, 20]) == (0.0, 4)

    def test_two_bins(self):
        stat, dof = chi_square_uniformity([30, 10])
        assert stat == pytest.approx(10.0)
        assert dof == 1

    def test_arithmetic(self):
        stat, dof = chi_square_uniformity([25, 15, 20, 20, 20])
        assert stat == pytest.approx(2.5)
        assert dof == 4


class TestDefaultBins:
    def test_desk_scale_defaults(self):
        assert default_bins(2000, 99) == 100
        assert default_bins(400, 99) == 20
        assert default_bins(100, 99) == 5
        assert default_bins(10, 99) == 1


def _hist_from_bin_probs(probs, N, L, seed):
    """Synthesize ranks whose display-bin occupancy follows ``probs``."""
    rng = np.random.default_rng(seed)
    B = len(probs)
    width = (L + 1) // B
    bins = rng.choice(B, size=N, p=np.asarray(probs) / np.sum(probs))
    offsets = rng.integers(0, width, size=N)
    return build_histogram(bins * width + offsets, L, B)


class TestClassifyShape:
    def test_uniform(self):
        hist = _hist_from_bin_probs([1.0] * 20, 2000, 99, seed=1)
        assert classify_shape(hist) == "uniform"

    def test_u_shape(self):
        probs = np.ones(20)
        probs[0] = probs[-1] = 4.0
        probs[5:15] = 0.5
        hist = _hist_from_bin_probs(probs, 2000, 99, seed=2)
        assert classify_shape(hist) == "u-shaped"

    def test_cap_shape(self):
        probs = np.ones(20) * 1.4
        probs[0] = probs[-1] = 0.2
        probs[1] = probs[-2] = 0.6
        hist = _hist_from_bin_probs(probs, 2000, 99, seed=3)
        assert classify_shape(hist) == "cap-shaped"

    def test_boundary_spikes(self):
        probs = np.ones(20) * 0.2
        probs[0] = probs[-1] = 5.0
        hist = _hist_from_bin_probs(probs, 1000, 99, seed=4)
        assert classify_shape(hist) == "boundary-spikes"

    def test_biased_high(self):
        # Linear tilt toward high ranks.
        probs = np.linspace(0.7, 1.3, 20)
        hist = _hist_from_bin_probs(probs, 2000, 99, seed=5)
        assert classify_shape(hist) == "biased-high-ranks"

    def test_biased_low(self):
        probs = np.linspace(1.3, 0.7, 20)
        hist = _hist_from_bin_probs(probs, 2000, 99, seed=6)
        assert classify_shape(hist) == "biased-low-ranks"


class TestQuantileBinCounts:
    def test_counts_sum_and_extremes(self):
        ranks = np.array([0, 0, 99, 99, 50])
        counts = quantile_bin_counts(ranks, 99, 20)
        assert counts.sum() == 5
        assert counts[0] == 2 and counts[-1] == 2


def test_theorem1_rank_uniformity_statistical():
    """Ranks of prior draws within exact posterior draws are discretely uniform."""
    model = make_normal_normal(NormalNormalSpec())
    L = 9
    N = 10_000
    seed = 20260810
    counts = np.zeros(L + 1, dtype=int)
    mu_q = model.quantities[0]
    for i in range(N):
        theta = model.prior_simulator(RandomStream(seed, i, "prior"))
        data = model.data_simulator(theta, RandomStream(seed, i, "data"))
        draws = sample_exact_conjugate(model, data, L, RandomStream(seed, i, "chain"))
        rank = rank_statistic(draws.values[:, 0], theta.values[0])
        counts[rank] += 1
    stat, dof = chi_square_uniformity(counts)
    assert dof == 9
    assert stat < CHI2_999_DOF9
