"""Kernel-level checks: weights, scaling, likelihood, gradient, information."""

import math

import numpy as np
import pytest

from exposure_glm import (
    Observation,
    Portfolio,
    RankDeficiencyError,
    TweedieFamily,
    TweedieParams,
    WeightScheme,
    d_matrix,
    fisher_info,
    gradient,
    homogeneous_mle,
    normalize,
    quasi_loglik,
    scale_params,
    weight,
)
from exposure_glm.solver import FitConfig, fit
from exposure_glm.verification import eig_min, finite_diff_gradient

from util import random_portfolio, toy_portfolio


class TestDomainTypes:
    def test_family_rejects_bad_variance_power(self):
        for p in (1.0, 2.0, 0.5, 2.5):
            with pytest.raises(ValueError):
                TweedieFamily(p=p)

    def test_family_rejects_bad_dispersion(self):
        with pytest.raises(ValueError):
            TweedieFamily(p=1.5, phi=0.0)

    def test_canonical_parameter(self):
        fam = TweedieFamily(p=1.5)
        assert fam.canonical_parameter(4.0) == pytest.approx(4.0**-0.5 / -0.5)

    def test_observation_rejects_zero_exposure(self):
        with pytest.raises(ValueError):
            Observation("a", 0.0, 1.0)

    def test_observation_rejects_negative_loss(self):
        with pytest.raises(ValueError):
            Observation("a", 0.5, -1.0)

    def test_observation_accepts_exact_zero_loss(self):
        obs = Observation("a", 0.5, 0.0)
        assert obs.loss_cost == 0.0

    def test_portfolio_needs_enough_rows(self):
        with pytest.raises(ValueError):
            Portfolio.from_arrays([0.5], [1.0], [[1.0, 2.0]])

    def test_portfolio_rejects_duplicate_columns(self):
        rng = np.random.default_rng(0)
        x = rng.normal(size=10)
        with pytest.raises(RankDeficiencyError) as excinfo:
            Portfolio.from_arrays(np.full(10, 0.5), np.ones(10), np.column_stack([x, x]))
        # both covariate columns (design indices 1 and 2) are implicated
        assert set(excinfo.value.column_indices) == {1, 2}

    def test_portfolio_rejects_constant_covariate(self):
        # a constant column duplicates the intercept
        with pytest.raises(RankDeficiencyError):
            Portfolio.from_arrays(np.full(6, 0.5), np.ones(6), np.ones((6, 1)))


class TestNormalize:
    @pytest.mark.parametrize(
        "loss,exposure,expected",
        [(0.0, 0.5, 0.0), (20.0, 1.0, 20.0), (5.0, 0.5, 10.0)],
    )
    def test_values(self, loss, exposure, expected):
        assert normalize(Observation("a", exposure, loss)) == expected


class TestWeight:
    @pytest.mark.parametrize(
        "scheme,t,p,expected",
        [
            (WeightScheme.OFFSET, 1.0, 1.5, 1.0),
            (WeightScheme.OFFSET, 0.25, 1.5, 0.5),
            (WeightScheme.RATIO, 0.25, 1.5, 0.25),
        ],
    )
    def test_values(self, scheme, t, p, expected):
        assert weight(scheme, t, p) == pytest.approx(expected, abs=1e-15)

    def test_domain_violations(self):
        with pytest.raises(ValueError):
            weight(WeightScheme.OFFSET, 0.0, 1.5)
        with pytest.raises(ValueError):
            weight(WeightScheme.OFFSET, 1.5, 1.5)
        with pytest.raises(ValueError):
            weight(WeightScheme.OFFSET, 0.5, 2.0)

    def test_offset_dominates_ratio(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            t = float(rng.uniform(1e-3, 1.0))
            p = float(rng.uniform(1.0 + 1e-9, 2.0 - 1e-9))
            w_off = weight(WeightScheme.OFFSET, t, p)
            w_rat = weight(WeightScheme.RATIO, t, p)
            assert w_off >= w_rat
            assert 0.0 < w_rat <= 1.0 and w_off <= 1.0
            if t < 1.0:
                assert w_off > w_rat

    def test_weights_equal_exactly_at_full_exposure(self):
        for p in (1.01, 1.42, 1.99):
            assert weight(WeightScheme.OFFSET, 1.0, p) == weight(WeightScheme.RATIO, 1.0, p) == 1.0

    def test_offset_weight_approaches_ratio_weight_near_p_one(self):
        t = np.linspace(0.05, 1.0, 50)
        gaps = [
            np.max(np.abs(weight(WeightScheme.OFFSET, t, p) - weight(WeightScheme.RATIO, t, p)))
            for p in (1.5, 1.1, 1.01, 1.0 + 1e-8)
        ]
        assert all(a > b for a, b in zip(gaps, gaps[1:]))
        assert gaps[-1] < 1e-7


class TestScaleParams:
    def test_identity_scaling(self):
        params = TweedieParams(100.0, 1.0, TweedieFamily(p=1.5))
        scaled = scale_params(params, 1.0)
        assert scaled.mu == 100.0 and scaled.w == 1.0

    def test_half_year(self):
        params = TweedieParams(100.0, 1.0, TweedieFamily(p=1.5))
        scaled = scale_params(params, 0.5)
        assert scaled.mu == pytest.approx(50.0)
        assert scaled.w == pytest.approx(math.sqrt(2.0), abs=1e-15)

    def test_round_trip(self):
        params = TweedieParams(100.0, 1.0, TweedieFamily(p=1.5))
        back = scale_params(scale_params(params, 0.3), 1.0 / 0.3)
        assert back.mu == pytest.approx(100.0, abs=1e-12)
        assert back.w == pytest.approx(1.0, abs=1e-12)

    def test_group_action(self):
        rng = np.random.default_rng(3)
        fam = TweedieFamily(p=1.7)
        for _ in range(50):
            params = TweedieParams(float(rng.uniform(1, 200)), float(rng.uniform(0.1, 2)), fam)
            s, t = float(rng.uniform(0.1, 3)), float(rng.uniform(0.1, 3))
            twice = scale_params(scale_params(params, s), t)
            once = scale_params(params, s * t)
            assert twice.mu == pytest.approx(once.mu, rel=1e-12)
            assert twice.w == pytest.approx(once.w, rel=1e-12)

    def test_rejects_nonpositive_scale(self):
        params = TweedieParams(1.0, 1.0, TweedieFamily(p=1.5))
        with pytest.raises(ValueError):
            scale_params(params, 0.0)


class TestQuasiLoglik:
    def test_zero_loss_contract_value(self):
        # z = 0 kills the first term, leaving -(w/phi) * zeta^(2-p) / (2-p)
        fam = TweedieFamily(p=1.5, phi=2.0)
        pf = Portfolio.from_arrays([0.5, 0.5], [0.0, 0.0])
        beta = np.array([0.7])
        w = 0.5**0.5
        expected = 2 * (-(w / 2.0) * math.exp(0.5 * 0.7) / 0.5)
        assert quasi_loglik(beta, pf, WeightScheme.OFFSET, fam) == pytest.approx(expected, rel=1e-14)

    def test_schemes_coincide_at_full_exposure(self):
        pf = random_portfolio(1, all_full=True)
        fam = TweedieFamily(p=1.3)
        rng = np.random.default_rng(2)
        for _ in range(10):
            beta = rng.normal(0, 0.5, 3)
            assert quasi_loglik(beta, pf, WeightScheme.OFFSET, fam) == quasi_loglik(
                beta, pf, WeightScheme.RATIO, fam
            )

    def test_local_maximum_at_fit(self):
        pf = toy_portfolio()
        fam = TweedieFamily(p=1.5)
        beta_hat = fit(pf, WeightScheme.RATIO, fam, FitConfig(tolerance=1e-13)).beta_hat
        top = quasi_loglik(beta_hat, pf, WeightScheme.RATIO, fam)
        for eps in (1e-4, -1e-4):
            assert top >= quasi_loglik(beta_hat + eps, pf, WeightScheme.RATIO, fam)

    def test_matches_loss_scale_formulation(self):
        # the offset weighting on z reproduces, term by term, the direct
        # evaluation on y with mean t * exp(score) and unit weights
        pf = random_portfolio(5)
        fam = TweedieFamily(p=1.42, phi=1.7)
        rng = np.random.default_rng(6)
        X, t, y = pf.design, pf.exposures, pf.loss_costs
        for _ in range(10):
            beta = rng.normal(0, 0.5, 3)
            mu = t * np.exp(X @ beta)
            direct = float(
                np.sum(mu ** (1 - fam.p) * y / (1 - fam.p) - mu ** (2 - fam.p) / (2 - fam.p))
                / fam.phi
            )
            assert quasi_loglik(beta, pf, WeightScheme.OFFSET, fam) == pytest.approx(
                direct, rel=1e-12
            )

    def test_dimension_mismatch(self):
        pf = toy_portfolio()
        with pytest.raises(ValueError):
            quasi_loglik(np.zeros(3), pf, WeightScheme.RATIO, TweedieFamily(p=1.5))


class TestGradient:
    def test_zero_at_homogeneous_mle(self):
        pf = toy_portfolio()
        for scheme in WeightScheme:
            fam = TweedieFamily(p=1.5)
            beta = np.array([math.log(homogeneous_mle(pf, scheme, fam))])
            assert np.max(np.abs(gradient(beta, pf, scheme, fam))) < 1e-10

    def test_matches_finite_differences(self):
        fam = TweedieFamily(p=1.42)
        rng = np.random.default_rng(8)
        for seed in range(20):
            pf = random_portfolio(seed, n=30, q=2)
            beta = rng.normal(0, 0.4, 3)
            for scheme in WeightScheme:
                g = gradient(beta, pf, scheme, fam)
                fd = finite_diff_gradient(lambda b: quasi_loglik(b, pf, scheme, fam), beta)
                rel = np.max(np.abs(g - fd)) / max(1.0, np.max(np.abs(g)))
                assert rel < 1e-6

    def test_offset_gradient_matches_loss_scale_form(self):
        # X.T @ D @ R is the same whether D, R are built from (z, w=t^(2-p))
        # or from (y, mu = t * zeta) with unit weights
        pf = random_portfolio(10)
        fam = TweedieFamily(p=1.42, phi=1.3)
        rng = np.random.default_rng(10)
        X, t, y = pf.design, pf.exposures, pf.loss_costs
        for _ in range(5):
            beta = rng.normal(0, 0.4, 3)
            mu = t * np.exp(X @ beta)
            d_loss = mu ** (2.0 - fam.p)
            direct = X.T @ (d_loss * (y / mu - 1.0)) / fam.phi
            np.testing.assert_allclose(
                gradient(beta, pf, WeightScheme.OFFSET, fam), direct, rtol=1e-12
            )
            info_direct = (X * d_loss[:, None]).T @ X / fam.phi
            np.testing.assert_allclose(
                fisher_info(beta, pf, WeightScheme.OFFSET, fam), info_direct, rtol=1e-12
            )

    def test_zero_when_losses_equal_means(self):
        rng = np.random.default_rng(9)
        t = rng.uniform(0.2, 1.0, 12)
        x = rng.normal(0, 0.5, (12, 1))
        beta = np.array([1.2, -0.4])
        y = t * np.exp(np.column_stack([np.ones(12), x]) @ beta)
        pf = Portfolio.from_arrays(t, y, x)
        fam = TweedieFamily(p=1.6)
        for scheme in WeightScheme:
            np.testing.assert_allclose(gradient(beta, pf, scheme, fam), 0.0, atol=1e-12)


class TestDMatrix:
    def test_schemes_equal_at_full_exposure(self):
        pf = random_portfolio(11, all_full=True)
        fam = TweedieFamily(p=1.42)
        beta = np.array([0.5, 0.2, -0.1])
        np.testing.assert_array_equal(
            d_matrix(beta, pf, WeightScheme.OFFSET, fam),
            d_matrix(beta, pf, WeightScheme.RATIO, fam),
        )

    def test_zero_score_values(self):
        pf = Portfolio.from_arrays([0.25, 0.25], [1.0, 2.0])
        fam = TweedieFamily(p=1.5)
        beta = np.zeros(1)
        np.testing.assert_allclose(d_matrix(beta, pf, WeightScheme.OFFSET, fam), 0.5)
        np.testing.assert_allclose(d_matrix(beta, pf, WeightScheme.RATIO, fam), 0.25)

    def test_offset_dominates_entrywise(self):
        fam = TweedieFamily(p=1.3)
        rng = np.random.default_rng(12)
        for seed in range(10):
            pf = random_portfolio(seed, n=25)
            beta = rng.normal(0, 0.5, 3)
            d_off = d_matrix(beta, pf, WeightScheme.OFFSET, fam)
            d_rat = d_matrix(beta, pf, WeightScheme.RATIO, fam)
            assert np.all(d_off >= d_rat)
            assert np.all(d_off[pf.exposures < 1.0] > d_rat[pf.exposures < 1.0])
            assert np.all(d_off > 0) and np.all(d_rat > 0)


class TestFisherInfo:
    def test_intercept_only_scalar(self):
        pf = Portfolio.from_arrays([0.5, 1.0], [5.0, 20.0])
        fam = TweedieFamily(p=1.5, phi=2.0)
        beta = np.array([0.3])
        w = np.array([0.5**0.5, 1.0])
        expected = float(np.sum(w * math.exp(0.5 * 0.3)) / 2.0)
        info = fisher_info(beta, pf, WeightScheme.OFFSET, fam)
        assert info.shape == (1, 1)
        assert info[0, 0] == pytest.approx(expected, rel=1e-14)

    def test_symmetric(self):
        pf = random_portfolio(13)
        info = fisher_info(np.array([0.2, 0.1, -0.3]), pf, WeightScheme.RATIO, TweedieFamily(p=1.42))
        assert np.max(np.abs(info - info.T)) == 0.0

    def test_positive_definite_on_random_portfolios(self):
        rng = np.random.default_rng(14)
        for seed in range(15):
            pf = random_portfolio(seed, n=30)
            beta = rng.normal(0, 0.5, 3)
            info = fisher_info(beta, pf, WeightScheme.OFFSET, TweedieFamily(p=1.7))
            assert eig_min(info) > 0.0
