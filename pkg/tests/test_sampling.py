import numpy as np
import pytest

from lsar import (
    DistributionError,
    LeverageScores,
    Provenance,
    RankDeficiencyError,
    SampleSizeError,
    SampleSizeRule,
    SamplingPlan,
    SizeMode,
    TimeSeries,
    exact_leverage,
    fit_ols,
    make_design,
)
from lsar.sampling import (
    RNG_NAME,
    distribution_checksum,
    draw_plan,
    make_rng,
    reduced_fit,
    sample_size,
)


def scores_from_distribution(pi: np.ndarray) -> LeverageScores:
    return LeverageScores.from_scores(
        1, np.asarray(pi, dtype=float), Provenance.EXACT
    )


class TestDrawPlan:
    def test_uniform_four_rows_unit_weights(self):
        plan = draw_plan(scores_from_distribution([1, 1, 1, 1]), 4, 0)
        np.testing.assert_allclose(plan.weights, np.ones(4))
        assert plan.size == 4

    def test_point_mass(self):
        plan = draw_plan(scores_from_distribution([1.0, 0.0, 0.0]), 3, 0)
        np.testing.assert_array_equal(plan.indices, [0, 0, 0])
        np.testing.assert_allclose(plan.weights, np.full(3, 1 / np.sqrt(3)))

    def test_deterministic_given_seed(self):
        scores = scores_from_distribution(np.arange(1.0, 101.0))
        a = draw_plan(scores, 50, 7, 3)
        b = draw_plan(scores, 50, 7, 3)
        np.testing.assert_array_equal(a.indices, b.indices)
        np.testing.assert_array_equal(a.weights, b.weights)
        assert a.source_distribution_checksum == b.source_distribution_checksum

    def test_empirical_frequencies_match_distribution(self):
        rng = np.random.default_rng(0)
        raw = rng.exponential(size=100_000)
        scores = scores_from_distribution(raw)
        s = 1000
        plan = draw_plan(scores, s, 12)
        pi = scores.distribution
        top = np.argsort(pi)[-20:]
        counts = np.bincount(plan.indices, minlength=pi.size)
        for i in top:
            sd = np.sqrt(s * pi[i] * (1 - pi[i]))
            assert abs(counts[i] - s * pi[i]) <= 3 * sd + 1

    def test_size_must_be_positive(self):
        with pytest.raises(SampleSizeError):
            draw_plan(scores_from_distribution([1, 1]), 0, 0)

    def test_zero_score_distribution_rejected(self):
        with pytest.raises(Exception):
            scores_from_distribution([0.0, 0.0])

    def test_rng_is_named(self):
        assert RNG_NAME == "philox"
        # Two generators with the same seed words produce the same stream.
        a = make_rng(1, 2).integers(0, 1000, size=5)
        b = make_rng(1, 2).integers(0, 1000, size=5)
        np.testing.assert_array_equal(a, b)


class TestSampleSize:
    def test_fraction_paper_scale(self):
        rule = SampleSizeRule(SizeMode.FRACTION, fraction=0.001)
        assert sample_size(rule, 20, 2_000_000) == 2000

    def test_fraction_floor(self):
        rule = SampleSizeRule(SizeMode.FRACTION, fraction=0.001)
        assert sample_size(rule, 5, 1000) == 6

    def test_theoretical_arithmetic(self):
        rule = SampleSizeRule(
            SizeMode.THEORETICAL, epsilon=0.5, delta=0.1, beta=1.0, constant=1.0
        )
        # ceil(1 * 10 * ln(100) / (1 * 0.25)) = ceil(184.2) = 185
        assert sample_size(rule, 10, 100_000) == 185

    def test_delta_override(self):
        rule = SampleSizeRule(
            SizeMode.THEORETICAL, epsilon=0.5, delta=0.1, beta=1.0, constant=1.0
        )
        assert sample_size(rule, 10, 100_000, delta=0.01) > 185

    def test_default_beta_floor(self):
        # With p sqrt(eps) >= 1 the misestimation factor hits its floor 0.1.
        rule = SampleSizeRule(SizeMode.THEORETICAL, epsilon=0.25, delta=0.1)
        big = sample_size(rule, 10, 10_000_000)
        fixed = SampleSizeRule(
            SizeMode.THEORETICAL, epsilon=0.25, delta=0.1, beta=0.1
        )
        assert big == sample_size(fixed, 10, 10_000_000)

    def test_fraction_clamps_with_warning(self):
        rule = SampleSizeRule(SizeMode.FRACTION, fraction=0.9)
        with pytest.warns(UserWarning, match="clamping"):
            assert sample_size(rule, 8, 10) == 2

    def test_theoretical_overflow_errors(self):
        rule = SampleSizeRule(
            SizeMode.THEORETICAL, epsilon=0.01, delta=0.1, beta=1.0
        )
        with pytest.raises(SampleSizeError):
            sample_size(rule, 10, 200)

    def test_invalid_parameters(self):
        with pytest.raises(SampleSizeError):
            SampleSizeRule(SizeMode.THEORETICAL, epsilon=1.5)
        with pytest.raises(SampleSizeError):
            SampleSizeRule(SizeMode.FRACTION, fraction=None)
        with pytest.raises(SampleSizeError):
            SampleSizeRule(SizeMode.THEORETICAL, beta=0.0)


class TestReducedFit:
    def test_identity_plan_equals_full_fit(self, ar1_series):
        design = make_design(ar1_series, 3)
        full = fit_ols(design)
        reduced = reduced_fit(design, SamplingPlan.identity(design.row_count))
        np.testing.assert_allclose(
            reduced.coefficients, full.coefficients, atol=1e-10
        )
        np.testing.assert_allclose(
            reduced.residual_norm, full.residual_norm, rtol=1e-10
        )

    def test_residuals_on_full_design(self, ar2_series):
        design = make_design(ar2_series, 2)
        plan = draw_plan(exact_leverage(design), 100, 3)
        fit = reduced_fit(design, plan)
        assert fit.residuals.size == design.row_count
        x = design.materialize()
        np.testing.assert_allclose(
            fit.residuals, design.responses - x @ fit.coefficients, atol=1e-10
        )
        assert fit.residual_norm >= fit_ols(design).residual_norm - 1e-12

    def test_out_of_range_indices_rejected(self, ar1_series):
        design = make_design(ar1_series, 2)
        bad = SamplingPlan(
            indices=np.array([design.row_count], dtype=np.int64),
            weights=np.array([1.0]),
            source_distribution_checksum="",
        )
        with pytest.raises(DistributionError):
            reduced_fit(design, bad)

    def test_degenerate_sample_rank_deficient(self, ar1_series):
        design = make_design(ar1_series, 3)
        # Three copies of the same row cannot span three columns.
        plan = SamplingPlan(
            indices=np.zeros(3, dtype=np.int64),
            weights=np.ones(3),
            source_distribution_checksum="",
        )
        with pytest.raises(RankDeficiencyError):
            reduced_fit(design, plan)


class TestUnbiasedness:
    def test_sketched_norm_is_unbiased(self, ar1_series):
        # E |S X phi|^2 = |X phi|^2 under the rescaled sampling scheme.
        design = make_design(ar1_series.prefix(53), 3)
        scores = exact_leverage(design)
        phi = np.array([0.4, -0.2, 0.1])
        target = float(np.linalg.norm(design.materialize() @ phi) ** 2)
        total = 0.0
        plans = 10_000
        for k in range(plans):
            plan = draw_plan(scores, 10, 5, k)
            sketched = design.rows[plan.indices] * plan.weights[:, None]
            total += float(np.linalg.norm(sketched @ phi) ** 2)
        assert abs(total / plans / target - 1.0) < 0.05


class TestChecksum:
    def test_checksum_tracks_content(self):
        a = distribution_checksum(np.array([0.5, 0.5]))
        b = distribution_checksum(np.array([0.5, 0.5]))
        c = distribution_checksum(np.array([0.4, 0.6]))
        assert a == b != c
