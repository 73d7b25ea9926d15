"""IRLS fitting of the coefficient vector for either weight scheme.

The update solves the symmetric positive-definite system
``(X.T @ D @ X) @ delta = X.T @ D @ R`` so the dispersion cancels
exactly; convergence is declared on the sup-norm of the
dispersion-scaled gradient ``X.T @ D @ R``.  Intercept-only portfolios
admit closed-form maximum-likelihood estimates (weighted means of the
annualized losses) which also seed the IRLS iteration.
"""

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .model_core import (
    Portfolio,
    SingularInformationError,
    TweedieFamily,
    WeightScheme,
    _scheme_weights,
    quasi_loglik,
)

__all__ = [
    "FitConfig",
    "FitResult",
    "AllZeroLossError",
    "homogeneous_mle",
    "init_beta",
    "irls_step",
    "fit",
]

_MAX_HALVINGS = 30


class AllZeroLossError(ValueError):
    """Every loss cost is zero, so the log-scale intercept is undefined."""


@dataclass
class FitConfig:
    """Stopping rule and initialization for the IRLS iteration.

    ``init`` is ``"homogeneous"`` (log of the intercept-only closed-form
    estimate, remaining coordinates zero), ``"zeros"``, or an explicit
    coefficient vector used as-is.  ``step_halving`` enables an optional
    safeguard that halves the update whenever the quasi-log-likelihood
    would decrease; it is off by default because the plain recursion
    converges cleanly on well-posed portfolios.
    """

    tolerance: float = 1e-8
    max_iterations: int = 100
    init: object = "homogeneous"
    step_halving: bool = False

    def __post_init__(self):
        if not (self.tolerance > 0.0):
            raise ValueError(f"tolerance must be positive, got {self.tolerance}")
        if self.max_iterations < 1:
            raise ValueError(f"max_iterations must be >= 1, got {self.max_iterations}")


@dataclass
class FitResult:
    """Converged (or stalled) fit: estimate, covariance, and trace.

    ``covariance`` is ``phi * (X.T @ D @ X)**-1`` evaluated at the final
    coefficient vector; ``gradient_norm`` is the sup-norm of the
    dispersion-scaled gradient there.  ``trace_beta`` holds every iterate
    starting from the initialization, ``trace_objective`` the matching
    quasi-log-likelihood values.
    """

    beta_hat: np.ndarray
    covariance: np.ndarray
    iterations: int
    converged: bool
    gradient_norm: float
    trace_beta: np.ndarray
    trace_objective: np.ndarray
    scheme: WeightScheme
    n_obs: int
    config: FitConfig = field(repr=False, default_factory=FitConfig)


def homogeneous_mle(portfolio: Portfolio, scheme: WeightScheme, family: TweedieFamily) -> float:
    """Closed-form intercept-only estimate: the weighted mean of ``z``.

    Under the ratio weighting this reduces to total losses over total
    exposure, which is what makes the ratio fit financially balanced.
    """
    if len(portfolio) == 0:
        raise ValueError("portfolio is empty")
    scheme = WeightScheme(scheme)
    w = _scheme_weights(scheme, portfolio.exposures, family.p)
    return float(np.dot(w, portfolio.normalized) / w.sum())


def init_beta(portfolio: Portfolio, scheme: WeightScheme, family: TweedieFamily, config: FitConfig):
    """Starting coefficient vector according to ``config.init``."""
    k = portfolio.q + 1
    init = config.init
    if isinstance(init, str):
        if init == "zeros":
            return np.zeros(k)
        if init == "homogeneous":
            level = homogeneous_mle(portfolio, scheme, family)
            if level <= 0.0:
                raise AllZeroLossError(
                    "cannot initialize at the homogeneous estimate: all loss costs are zero"
                )
            beta = np.zeros(k)
            beta[0] = math.log(level)
            return beta
        raise ValueError(f"unknown init strategy {init!r}")
    beta = np.asarray(init, dtype=float).copy()
    if beta.shape != (k,):
        raise ValueError(f"init vector must have length {k}, got shape {beta.shape}")
    return beta


def _scaled_system(beta, portfolio, scheme, family):
    """Dispersion-free normal equations: (X.T D X, X.T D R)."""
    X = portfolio.design
    s = X @ beta
    d = _scheme_weights(scheme, portfolio.exposures, family.p) * np.exp((2.0 - family.p) * s)
    r = portfolio.normalized * np.exp(-s) - 1.0
    info = (X * d[:, None]).T @ X
    info = 0.5 * (info + info.T)
    return info, X.T @ (d * r)


def _spd_solve(matrix, rhs):
    try:
        factor = scipy.linalg.cho_factor(matrix)
    except (scipy.linalg.LinAlgError, ValueError) as exc:
        raise SingularInformationError(
            "weighted information matrix is not positive definite"
        ) from exc
    return scipy.linalg.cho_solve(factor, rhs), factor


def irls_step(beta, portfolio: Portfolio, scheme: WeightScheme, family: TweedieFamily):
    """One Fisher-scoring update ``beta + (X.T D X)**-1 @ (X.T D R)``."""
    beta = np.asarray(beta, dtype=float)
    scheme = WeightScheme(scheme)
    info, score = _scaled_system(beta, portfolio, scheme, family)
    delta, _ = _spd_solve(info, score)
    return beta + delta


def fit(
    portfolio: Portfolio,
    scheme: WeightScheme,
    family: TweedieFamily,
    config: FitConfig | None = None,
) -> FitResult:
    """Fit the coefficient vector by IRLS under the given weight scheme.

    Returns a FitResult with ``converged=False`` (rather than raising)
    when the iteration budget is exhausted; a singular weighted
    information matrix aborts with SingularInformationError.
    """
    scheme = WeightScheme(scheme)
    config = config if config is not None else FitConfig()
    if portfolio.loss_costs.sum() <= 0.0:
        raise AllZeroLossError("cannot fit a portfolio whose loss costs are all zero")

    beta = init_beta(portfolio, scheme, family, config)
    trace_beta = [beta.copy()]
    trace_objective = [quasi_loglik(beta, portfolio, scheme, family)]

    converged = False
    gradient_norm = math.inf
    iterations = 0
    factor = None
    for iteration in range(config.max_iterations + 1):
        info, score = _scaled_system(beta, portfolio, scheme, family)
        gradient_norm = float(np.max(np.abs(score)))
        if gradient_norm < config.tolerance:
            converged = True
            _, factor = _spd_solve(info, score)
            break
        if iteration == config.max_iterations:
            _, factor = _spd_solve(info, score)
            break
        delta, factor = _spd_solve(info, score)
        candidate = beta + delta
        objective = quasi_loglik(candidate, portfolio, scheme, family)
        if config.step_halving:
            halvings = 0
            while objective < trace_objective[-1] and halvings < _MAX_HALVINGS:
                delta *= 0.5
                candidate = beta + delta
                objective = quasi_loglik(candidate, portfolio, scheme, family)
                halvings += 1
        beta = candidate
        iterations = iteration + 1
        trace_beta.append(beta.copy())
        trace_objective.append(objective)

    covariance = family.phi * scipy.linalg.cho_solve(factor, np.eye(portfolio.q + 1))
    covariance = 0.5 * (covariance + covariance.T)
    return FitResult(
        beta_hat=beta,
        covariance=covariance,
        iterations=iterations,
        converged=converged,
        gradient_norm=gradient_norm,
        trace_beta=np.asarray(trace_beta),
        trace_objective=np.asarray(trace_objective),
        scheme=scheme,
        n_obs=portfolio.n,
        config=config,
    )
