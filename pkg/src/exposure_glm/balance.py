"""Observed-gap diagnostics: individual gaps, class balance, group summaries.

The individual gap of a contract is ``t * (z - zeta_hat)``, the shortfall
of its exposure-scaled premium against its observed loss cost.  A ratio
fit with an intercept zeroes the portfolio total exactly; an offset fit
does not, and the sign of its total tracks whether losses increase or
decrease with exposure.
"""

import math
from dataclasses import dataclass

import numpy as np

from .model_core import Portfolio
from .solver import FitResult

__all__ = [
    "GapRecord",
    "ClassBalanceRow",
    "GroupSummary",
    "individual_gaps",
    "portfolio_gap",
    "class_report",
    "group_summaries",
    "balance_factor",
]


@dataclass(frozen=True)
class GapRecord:
    contract_id: str
    exposure: float
    observed_z: float
    fitted_zeta: float
    gap: float


@dataclass(frozen=True)
class ClassBalanceRow:
    """Aggregate losses vs. premiums for one level of one risk factor."""

    factor_name: str
    level: float
    loss_sum: float
    premium_sum: float
    ratio: float | None
    single_level: bool = False


@dataclass(frozen=True)
class GroupSummary:
    """Contract share, mean exposure and loss-cost reference of one group.

    The reference is the group's mean loss cost divided by the portfolio
    mean loss cost, so contract-share-weighted references recombine to 1.
    """

    label: str
    contract_share: float
    mean_exposure: float
    loss_cost_reference: float


def _check_fit(portfolio, fit):
    if fit.n_obs != portfolio.n or fit.beta_hat.shape != (portfolio.q + 1,):
        raise ValueError(
            f"fit (n={fit.n_obs}, k={fit.beta_hat.shape}) does not match "
            f"portfolio (n={portfolio.n}, k={portfolio.q + 1})"
        )


def _fitted_zetas(portfolio, fit):
    return np.exp(portfolio.design @ fit.beta_hat)


def individual_gaps(portfolio: Portfolio, fit: FitResult):
    """Per-contract gaps ``t_i * (z_i - zeta_hat_i)``, portfolio order preserved."""
    _check_fit(portfolio, fit)
    zetas = _fitted_zetas(portfolio, fit)
    records = []
    for obs, zeta in zip(portfolio.observations, zetas):
        z = obs.loss_cost / obs.exposure
        records.append(
            GapRecord(
                contract_id=obs.contract_id,
                exposure=obs.exposure,
                observed_z=z,
                fitted_zeta=float(zeta),
                gap=obs.exposure * (z - float(zeta)),
            )
        )
    return records


def portfolio_gap(gaps) -> float:
    """Sum of individual gaps, accumulated left to right in list order."""
    gaps = list(gaps)
    if not gaps:
        raise ValueError("gap list is empty")
    total = 0.0
    for record in gaps:
        total += record.gap
    return total


def class_report(portfolio: Portfolio, fit: FitResult, factor_index: int, factor_name=None):
    """Balance rows per level of design column ``factor_index``.

    Index 0 is the intercept (a single constant level, flagged), indices
    1..q the covariates.  Rows are ordered by ascending aggregate loss;
    a level with zero losses keeps its premium sum and reports an
    undefined ratio instead of an infinite one.
    """
    _check_fit(portfolio, fit)
    if not (0 <= factor_index <= portfolio.q):
        raise ValueError(f"factor index must lie in [0, {portfolio.q}], got {factor_index}")
    if factor_name is None:
        factor_name = "intercept" if factor_index == 0 else portfolio.covariate_names[factor_index - 1]

    column = portfolio.design[:, factor_index]
    premiums = portfolio.exposures * _fitted_zetas(portfolio, fit)
    levels = np.unique(column)
    rows = []
    for level in levels:
        mask = column == level
        loss_sum = float(portfolio.loss_costs[mask].sum())
        premium_sum = float(premiums[mask].sum())
        ratio = premium_sum / loss_sum if loss_sum > 0.0 else None
        rows.append(
            ClassBalanceRow(
                factor_name=str(factor_name),
                level=float(level),
                loss_sum=loss_sum,
                premium_sum=premium_sum,
                ratio=ratio,
                single_level=levels.size == 1,
            )
        )
    rows.sort(key=lambda row: row.loss_sum)
    return rows


def group_summaries(portfolio: Portfolio, grouping="exposure"):
    """Descriptive statistics per contract group.

    ``grouping`` is either the built-in ``"exposure"`` predicate (full
    exposure ``t == 1`` vs. mid-term ``t < 1``) or a callable mapping an
    observation to a group label.  Groups are reported in sorted label
    order.
    """
    if grouping == "exposure":
        predicate = lambda obs: "full_exposure" if obs.exposure == 1.0 else "mid_term"
    elif callable(grouping):
        predicate = grouping
    else:
        raise ValueError(f"unknown grouping {grouping!r}")

    labels = [str(predicate(obs)) for obs in portfolio.observations]
    portfolio_mean_loss = float(portfolio.loss_costs.mean())
    summaries = []
    for label in sorted(set(labels)):
        mask = np.array([lab == label for lab in labels])
        count = int(mask.sum())
        group_mean_loss = float(portfolio.loss_costs[mask].mean())
        reference = (
            group_mean_loss / portfolio_mean_loss if portfolio_mean_loss > 0.0 else math.nan
        )
        summaries.append(
            GroupSummary(
                label=label,
                contract_share=count / portfolio.n,
                mean_exposure=float(portfolio.exposures[mask].mean()),
                loss_cost_reference=reference,
            )
        )
    return summaries


def balance_factor(portfolio: Portfolio, fit: FitResult) -> float:
    """Total estimated premium over total observed loss, ``sum(t * zeta_hat) / sum(y)``."""
    _check_fit(portfolio, fit)
    total_loss = float(portfolio.loss_costs.sum())
    if total_loss <= 0.0:
        raise ValueError("balance factor undefined: total loss cost is zero")
    total_premium = float(np.dot(portfolio.exposures, _fitted_zetas(portfolio, fit)))
    return total_premium / total_loss
