"""Shared portfolio builders for the test suite (all seeded, all frozen)."""

import numpy as np

from exposure_glm import CountData, Portfolio


def toy_portfolio():
    """Two intercept-only contracts with closed-form estimates.

    t = (0.5, 1.0), y = (5, 20)  =>  z = (10, 20),
    ratio estimate 25/1.5, offset estimate (sqrt(.5)*10 + 20)/(sqrt(.5)+1).
    """
    return Portfolio.from_arrays([0.5, 1.0], [5.0, 20.0])


def random_portfolio(seed, n=40, q=2, zero_frac=0.3, full_frac=0.3, all_full=False):
    """Mixed-exposure portfolio with semicontinuous losses and q covariates."""
    rng = np.random.default_rng(seed)
    if all_full:
        t = np.ones(n)
    else:
        t = np.where(rng.random(n) < full_frac, 1.0, rng.uniform(0.08, 0.999, n))
    covariates = None
    if q:
        covariates = np.column_stack(
            [(rng.random(n) < 0.5).astype(float)] + [rng.normal(0.0, 0.5, n) for _ in range(q - 1)]
        )
    y = np.where(rng.random(n) < zero_frac, 0.0, rng.gamma(2.0, 40.0, n)) * t
    if y.sum() == 0.0:
        y[0] = 25.0
    return Portfolio.from_arrays(t, y, covariates)


def random_count_data(seed, n=60, q=2):
    """Poisson counts with mean t * exp(x @ beta_true), mixed exposures."""
    rng = np.random.default_rng(seed)
    t = np.where(rng.random(n) < 0.4, 1.0, rng.uniform(0.1, 1.0, n))
    covariates = np.column_stack(
        [(rng.random(n) < 0.6).astype(float), rng.normal(0.0, 0.5, n)]
    )[:, :q]
    beta_true = np.array([0.3, 0.4, -0.3])[: q + 1]
    design = np.column_stack([np.ones(n), covariates])
    counts = rng.poisson(t * np.exp(design @ beta_true))
    if counts.sum() == 0:
        counts[0] = 1
    return CountData.from_arrays(t, counts, covariates)


def zip_count_data(seed, n=80, zero_inflation=0.3, all_full=False):
    """Zero-inflated Poisson counts with one covariate."""
    rng = np.random.default_rng(seed)
    if all_full:
        t = np.ones(n)
    else:
        t = np.where(rng.random(n) < 0.5, 1.0, rng.uniform(0.15, 0.9, n))
    x = rng.normal(0.0, 0.5, (n, 1))
    lam = t * np.exp(0.5 + 0.4 * x[:, 0])
    counts = np.where(rng.random(n) < zero_inflation, 0, rng.poisson(lam))
    if counts.sum() == 0:
        counts[0] = 1
    return CountData.from_arrays(t, counts, x)
