"""Command-line surface: ingest CSV portfolios, fit, compare, simulate, report.

Input schema (UTF-8, ``.`` decimal, no thousands separators):

    contract_id,exposure,loss_cost,x1,...,xq

for loss-cost commands, and ``contract_id,exposure,count,x1,...,xq`` for
the claim-count command.  All output files are written atomically
(temp-then-rename), numbers carry 17 significant digits, and every
artifact is a deterministic function of (input bytes, flags, seed).
Log verbosity is controlled by the ``EXPOSURE_GLM_LOG`` environment
variable (error, info or debug; default error), logged to stderr.
"""

import argparse
import csv
import json
import logging
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .balance import balance_factor, class_report, individual_gaps, portfolio_gap
from .claim_count import CountData, CountObservation, poisson_fit, zip_nonequivalence_check
from .model_core import (
    Observation,
    Portfolio,
    RankDeficiencyError,
    TweedieFamily,
    WeightScheme,
)
from .simulate import Scenario, ScenarioConfig, run_gap_experiment
from .solver import AllZeroLossError, FitConfig, SingularInformationError, fit

__all__ = ["RunConfig", "IngestError", "ingest_csv", "ingest_counts_csv", "main"]

SCHEMA_VERSION = 1
_QUANTILES = (0.0, 0.05, 0.25, 0.5, 0.75, 0.95, 1.0)

log = logging.getLogger("exposure_glm")


class IngestError(ValueError):
    """Malformed input file; carries the offending row / column when known."""

    def __init__(self, message, row=None, column=None):
        location = ""
        if row is not None:
            location += f"row {row}"
        if column is not None:
            location += (", " if location else "") + f"column {column!r}"
        super().__init__(f"{location}: {message}" if location else message)
        self.row = row
        self.column = column


@dataclass
class RunConfig:
    """Parsed command-line invocation."""

    command: str
    input: Path | None = None
    out: Path = Path(".")
    p: float = 1.42
    phi: float = 1.0
    scheme: str = "both"
    tolerance: float = 1e-8
    max_iterations: int = 100
    seed: int = 0
    scenario: str = "increasing"
    heterogeneous: bool = False
    n: int = 100
    zero_inflation: float = 0.3


def _setup_logging():
    level = os.environ.get("EXPOSURE_GLM_LOG", "error").strip().lower()
    mapping = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    logging.basicConfig(
        level=mapping.get(level, logging.ERROR),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def _fmt(value):
    if isinstance(value, float):
        return format(value, ".17g")
    return "" if value is None else str(value)


def _write_csv(path: Path, header, rows):
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    os.replace(tmp, path)
    log.info("wrote %s", path)


def _write_json(path: Path, payload):
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    os.replace(tmp, path)
    log.info("wrote %s", path)


def _parse_float(raw, row, column):
    try:
        value = float(raw)
    except ValueError:
        raise IngestError(f"not a number: {raw!r}", row=row, column=column) from None
    if not math.isfinite(value):
        raise IngestError(f"not finite: {raw!r}", row=row, column=column)
    return value


def _read_rows(path, leading_columns):
    path = Path(path)
    if not path.exists():
        raise IngestError(f"input file not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise IngestError("file is empty", row=1)
        if [h.strip() for h in header[: len(leading_columns)]] != list(leading_columns):
            raise IngestError(
                f"header must start with {','.join(leading_columns)}, got {','.join(header)}",
                row=1,
            )
        covariate_names = [h.strip() for h in header[len(leading_columns) :]]
        rows = []
        for lineno, record in enumerate(reader, start=2):
            if not record:
                continue
            if len(record) != len(header):
                raise IngestError(
                    f"expected {len(header)} fields, got {len(record)}", row=lineno
                )
            rows.append((lineno, record))
        if not rows:
            raise IngestError("no data rows")
    return covariate_names, rows


def ingest_csv(path) -> Portfolio:
    """Load and validate a loss-cost portfolio CSV."""
    covariate_names, rows = _read_rows(path, ("contract_id", "exposure", "loss_cost"))
    observations = []
    for lineno, record in rows:
        exposure = _parse_float(record[1], lineno, "exposure")
        if not (0.0 < exposure <= 1.0):
            raise IngestError(
                f"exposure must lie in (0, 1], got {exposure}", row=lineno, column="exposure"
            )
        loss = _parse_float(record[2], lineno, "loss_cost")
        if loss < 0.0:
            raise IngestError(
                f"loss cost must be >= 0, got {loss}", row=lineno, column="loss_cost"
            )
        covariates = tuple(
            _parse_float(raw, lineno, name)
            for name, raw in zip(covariate_names, record[3:])
        )
        observations.append(Observation(record[0], exposure, loss, covariates))
    try:
        return Portfolio(observations, covariate_names=covariate_names or None)
    except RankDeficiencyError as exc:
        names = ["intercept"] + covariate_names
        involved = [names[i] for i in exc.column_indices if i < len(names)]
        raise IngestError(
            f"design matrix is rank deficient; columns involved: {', '.join(involved)}"
        ) from exc
    except ValueError as exc:
        raise IngestError(str(exc)) from exc


def ingest_counts_csv(path) -> CountData:
    """Load and validate a claim-count CSV."""
    covariate_names, rows = _read_rows(path, ("contract_id", "exposure", "count"))
    observations = []
    for lineno, record in rows:
        exposure = _parse_float(record[1], lineno, "exposure")
        if not (0.0 < exposure <= 1.0):
            raise IngestError(
                f"exposure must lie in (0, 1], got {exposure}", row=lineno, column="exposure"
            )
        count = _parse_float(record[2], lineno, "count")
        if count < 0 or count != int(count):
            raise IngestError(
                f"count must be a non-negative integer, got {record[2]!r}",
                row=lineno,
                column="count",
            )
        covariates = tuple(
            _parse_float(raw, lineno, name)
            for name, raw in zip(covariate_names, record[3:])
        )
        observations.append(CountObservation(exposure, int(count), covariates))
    try:
        return CountData(observations)
    except RankDeficiencyError as exc:
        raise IngestError(f"design matrix is rank deficient: {exc}") from exc
    except ValueError as exc:
        raise IngestError(str(exc)) from exc


def write_portfolio_csv(portfolio: Portfolio, path):
    """Serialize a portfolio back to the input schema (round-trippable)."""
    header = ["contract_id", "exposure", "loss_cost", *portfolio.covariate_names]
    rows = [
        [obs.contract_id, obs.exposure, obs.loss_cost, *obs.covariates]
        for obs in portfolio.observations
    ]
    _write_csv(Path(path), header, rows)


def _fit_payload(result):
    return {
        "beta": [float(b) for b in result.beta_hat],
        "covariance": [[float(v) for v in row] for row in result.covariance],
        "iterations": result.iterations,
        "converged": result.converged,
        "gradient_norm": result.gradient_norm,
    }


def _fit_both(portfolio, config):
    family = TweedieFamily(p=config.p, phi=config.phi)
    fit_config = FitConfig(tolerance=config.tolerance, max_iterations=config.max_iterations)
    results = {}
    for scheme in (WeightScheme.OFFSET, WeightScheme.RATIO):
        results[scheme] = fit(portfolio, scheme, family, fit_config)
        log.info(
            "%s fit: converged=%s iterations=%d", scheme.value,
            results[scheme].converged, results[scheme].iterations,
        )
    return family, results


def cmd_fit(config: RunConfig):
    portfolio = ingest_csv(config.input)
    family = TweedieFamily(p=config.p, phi=config.phi)
    fit_config = FitConfig(tolerance=config.tolerance, max_iterations=config.max_iterations)
    schemes = {
        "offset": [WeightScheme.OFFSET],
        "ratio": [WeightScheme.RATIO],
        "both": [WeightScheme.OFFSET, WeightScheme.RATIO],
    }[config.scheme]
    payload = {
        "schema_version": SCHEMA_VERSION,
        "p": config.p,
        "phi": config.phi,
        "n": portfolio.n,
        "covariates": list(portfolio.covariate_names),
        "schemes": {},
    }
    for scheme in schemes:
        payload["schemes"][scheme.value] = _fit_payload(fit(portfolio, scheme, family, fit_config))
    _write_json(config.out / "fit.json", payload)


def _gap_rows(portfolio, gaps_offset, gaps_ratio):
    rows = []
    for go, gr in zip(gaps_offset, gaps_ratio):
        rows.append(
            [go.contract_id, go.exposure, go.observed_z, go.fitted_zeta, gr.fitted_zeta, go.gap, gr.gap]
        )
    return rows


def _class_balance_rows(portfolio, result_offset, result_ratio):
    rows = []
    factor_indices = range(1, portfolio.q + 1) if portfolio.q else [0]
    for j in factor_indices:
        offset_rows = class_report(portfolio, result_offset, j)
        ratio_rows = {row.level: row for row in class_report(portfolio, result_ratio, j)}
        for row in offset_rows:
            partner = ratio_rows[row.level]
            rows.append(
                [
                    row.factor_name,
                    row.level,
                    row.loss_sum,
                    row.premium_sum,
                    partner.premium_sum,
                    row.ratio,
                    partner.ratio,
                ]
            )
    return rows


def cmd_compare(config: RunConfig):
    portfolio = ingest_csv(config.input)
    family, results = _fit_both(portfolio, config)
    result_offset = results[WeightScheme.OFFSET]
    result_ratio = results[WeightScheme.RATIO]

    payload = {
        "schema_version": SCHEMA_VERSION,
        "p": config.p,
        "phi": config.phi,
        "n": portfolio.n,
        "covariates": list(portfolio.covariate_names),
        "schemes": {
            "offset": _fit_payload(result_offset),
            "ratio": _fit_payload(result_ratio),
        },
    }
    _write_json(config.out / "fit.json", payload)

    names = ["intercept", *portfolio.covariate_names]
    coeff_rows = []
    for name, bo, br in zip(names, result_offset.beta_hat, result_ratio.beta_hat):
        ratio = float(bo) / float(br) if br != 0.0 else math.nan
        coeff_rows.append([name, float(bo), float(br), ratio])
    _write_csv(config.out / "coeff_ratios.csv", ["covariate", "beta_offset", "beta_ratio", "ratio"], coeff_rows)

    zeta_offset = np.exp(portfolio.design @ result_offset.beta_hat)
    zeta_ratio = np.exp(portfolio.design @ result_ratio.beta_hat)
    premium_ratios = zeta_offset / zeta_ratio
    quantile_rows = [
        [q, float(np.quantile(premium_ratios, q))] for q in _QUANTILES
    ]
    _write_csv(config.out / "premium_ratios.csv", ["quantile", "ratio"], quantile_rows)

    gaps_offset = individual_gaps(portfolio, result_offset)
    gaps_ratio = individual_gaps(portfolio, result_ratio)
    _write_csv(
        config.out / "gaps.csv",
        ["contract_id", "exposure", "z", "zeta_offset", "zeta_ratio", "gap_offset", "gap_ratio"],
        _gap_rows(portfolio, gaps_offset, gaps_ratio),
    )
    _write_csv(
        config.out / "class_balance.csv",
        ["factor", "level", "loss_sum", "premium_sum_offset", "premium_sum_ratio", "ratio_offset", "ratio_ratio"],
        _class_balance_rows(portfolio, result_offset, result_ratio),
    )


def cmd_balance(config: RunConfig):
    portfolio = ingest_csv(config.input)
    family, results = _fit_both(portfolio, config)
    result_offset = results[WeightScheme.OFFSET]
    result_ratio = results[WeightScheme.RATIO]
    gaps_offset = individual_gaps(portfolio, result_offset)
    gaps_ratio = individual_gaps(portfolio, result_ratio)
    _write_csv(
        config.out / "gaps.csv",
        ["contract_id", "exposure", "z", "zeta_offset", "zeta_ratio", "gap_offset", "gap_ratio"],
        _gap_rows(portfolio, gaps_offset, gaps_ratio),
    )
    _write_csv(
        config.out / "class_balance.csv",
        ["factor", "level", "loss_sum", "premium_sum_offset", "premium_sum_ratio", "ratio_offset", "ratio_ratio"],
        _class_balance_rows(portfolio, result_offset, result_ratio),
    )
    _write_json(
        config.out / "balance.json",
        {
            "schema_version": SCHEMA_VERSION,
            "balance_factor_offset": balance_factor(portfolio, result_offset),
            "balance_factor_ratio": balance_factor(portfolio, result_ratio),
            "portfolio_gap_offset": portfolio_gap(gaps_offset),
            "portfolio_gap_ratio": portfolio_gap(gaps_ratio),
        },
    )


def cmd_simulate(config: RunConfig):
    scenario_config = ScenarioConfig(
        n=config.n,
        scenario=Scenario(config.scenario),
        heterogeneous=config.heterogeneous,
        p=config.p,
        seed=config.seed,
    )
    experiment = run_gap_experiment(scenario_config)
    _write_csv(
        config.out / "gap_experiment.csv",
        ["rank", "exposure", "gap_offset", "gap_ratio"],
        experiment.rows(),
    )
    portfolio = experiment.synthetic.portfolio
    _write_json(
        config.out / "gap_totals.json",
        {
            "schema_version": SCHEMA_VERSION,
            "n": config.n,
            "scenario": scenario_config.scenario.value,
            "heterogeneous": config.heterogeneous,
            "p": config.p,
            "seed": config.seed,
            "total_gap_offset": experiment.total_offset,
            "total_gap_ratio": experiment.total_ratio,
            "balance_factor_offset": balance_factor(portfolio, experiment.fit_offset),
            "balance_factor_ratio": balance_factor(portfolio, experiment.fit_ratio),
            "iterations_offset": experiment.fit_offset.iterations,
            "iterations_ratio": experiment.fit_ratio.iterations,
        },
    )


def cmd_counts(config: RunConfig):
    data = ingest_counts_csv(config.input)
    beta_offset = poisson_fit(data, "offset", tolerance=config.tolerance)
    beta_ratio = poisson_fit(data, "ratio", tolerance=config.tolerance)
    evidence = zip_nonequivalence_check(data, zero_inflation=config.zero_inflation)
    _write_json(
        config.out / "counts.json",
        {
            "schema_version": SCHEMA_VERSION,
            "poisson_beta_offset": [float(b) for b in beta_offset],
            "poisson_beta_ratio": [float(b) for b in beta_ratio],
            "poisson_max_coefficient_diff": float(np.max(np.abs(beta_offset - beta_ratio))),
            "zip_zero_inflation": config.zero_inflation,
            "zip_equivalent": evidence.equivalent,
            "zip_spread": evidence.spread,
            "zip_differences": [float(d) for d in evidence.differences],
        },
    )


_COMMANDS = {
    "fit": cmd_fit,
    "compare": cmd_compare,
    "balance": cmd_balance,
    "simulate": cmd_simulate,
    "counts": cmd_counts,
}


def _add_model_flags(parser):
    parser.add_argument("--p", type=float, default=1.42, help="Tweedie variance power in (1, 2)")
    parser.add_argument("--phi", type=float, default=1.0, help="dispersion (scales covariances only)")
    parser.add_argument("--tol", type=float, default=1e-8, help="sup-norm gradient tolerance")
    parser.add_argument("--max-iter", type=int, default=100, help="IRLS iteration budget")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="exposure-glm",
        description="Fit and compare offset vs. ratio exposure treatments for Tweedie loss-cost GLMs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_text in (
        ("fit", "fit one or both schemes and write fit.json"),
        ("compare", "fit both schemes and write comparison tables"),
        ("balance", "fit both schemes and write balance diagnostics"),
    ):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--input", required=True, type=Path, help="portfolio CSV")
        cmd.add_argument("--out", required=True, type=Path, help="output directory")
        cmd.add_argument(
            "--scheme", choices=("offset", "ratio", "both"), default="both",
            help="which scheme(s) to fit (fit command only; compare/balance always fit both)",
        )
        _add_model_flags(cmd)

    sim = sub.add_parser("simulate", help="run a seeded gap experiment")
    sim.add_argument("--out", required=True, type=Path, help="output directory")
    sim.add_argument("--n", type=int, default=100, help="number of contracts")
    sim.add_argument("--seed", type=int, default=0, help="64-bit experiment seed")
    sim.add_argument(
        "--scenario", choices=("increasing", "decreasing"), default="increasing",
        help="how loss costs move with exposure rank",
    )
    sim.add_argument("--heterogeneous", action="store_true", help="include two binary risk factors")
    sim.add_argument("--p", type=float, default=1.42, help="Tweedie variance power in (1, 2)")

    counts = sub.add_parser("counts", help="Poisson equivalence and zero-inflation evidence")
    counts.add_argument("--input", required=True, type=Path, help="claim-count CSV")
    counts.add_argument("--out", required=True, type=Path, help="output directory")
    counts.add_argument("--tol", type=float, default=1e-10, help="score tolerance")
    counts.add_argument(
        "--zero-inflation", type=float, default=0.3,
        help="zero-inflation mass used for the non-equivalence probe",
    )
    return parser


def _config_from_args(args) -> RunConfig:
    config = RunConfig(command=args.command)
    for attr, name in (
        ("input", "input"),
        ("out", "out"),
        ("p", "p"),
        ("phi", "phi"),
        ("scheme", "scheme"),
        ("tolerance", "tol"),
        ("max_iterations", "max_iter"),
        ("seed", "seed"),
        ("scenario", "scenario"),
        ("heterogeneous", "heterogeneous"),
        ("n", "n"),
        ("zero_inflation", "zero_inflation"),
    ):
        if hasattr(args, name):
            setattr(config, attr, getattr(args, name))
    if not (1.0 < config.p < 2.0):
        raise ValueError(f"--p must lie strictly between 1 and 2, got {config.p}")
    return config


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _config_from_args(args)
        config.out.mkdir(parents=True, exist_ok=True)
        _COMMANDS[config.command](config)
    except (
        IngestError,
        RankDeficiencyError,
        AllZeroLossError,
        SingularInformationError,
        ValueError,
        RuntimeError,
    ) as exc:
        json.dump(
            {"schema_version": SCHEMA_VERSION, "error": type(exc).__name__, "message": str(exc)},
            sys.stderr,
        )
        sys.stderr.write("\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
