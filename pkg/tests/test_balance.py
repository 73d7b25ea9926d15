"""Gap records, portfolio totals, class balance, group summaries."""

import math

import numpy as np
import pytest

from exposure_glm import (
    FitConfig,
    Portfolio,
    TweedieFamily,
    WeightScheme,
    balance_factor,
    class_report,
    fit,
    group_summaries,
    individual_gaps,
    portfolio_gap,
)
from exposure_glm.simulate import Scenario, ScenarioConfig, gen_mimic_portfolio, run_gap_experiment

from util import random_portfolio, toy_portfolio

FAM = TweedieFamily(p=1.5)
TIGHT = FitConfig(tolerance=1e-14)


class TestIndividualGaps:
    def test_ratio_gaps_sum_to_zero_on_homogeneous_portfolio(self):
        for seed in range(5):
            pf = random_portfolio(seed, q=0)
            result = fit(pf, WeightScheme.RATIO, FAM, TIGHT)
            gaps = individual_gaps(pf, result)
            assert abs(portfolio_gap(gaps)) < 1e-10

    def test_offset_gaps_do_not_balance(self):
        pf = toy_portfolio()
        result = fit(pf, WeightScheme.OFFSET, FAM, TIGHT)
        assert abs(portfolio_gap(individual_gaps(pf, result))) > 1e-6

    def test_perfect_fit_contract_has_zero_gap(self):
        rng = np.random.default_rng(1)
        t = rng.uniform(0.2, 1.0, 10)
        x = rng.normal(0, 0.5, (10, 1))
        beta = np.array([1.0, 0.5])
        y = t * np.exp(np.column_stack([np.ones(10), x]) @ beta)
        pf = Portfolio.from_arrays(t, y, x)
        result = fit(pf, WeightScheme.RATIO, FAM, TIGHT)
        for record in individual_gaps(pf, result):
            assert record.gap == pytest.approx(0.0, abs=1e-9)

    def test_gap_identity_holds_exactly(self):
        pf = random_portfolio(2)
        result = fit(pf, WeightScheme.OFFSET, FAM)
        for record in individual_gaps(pf, result):
            assert record.gap == record.exposure * (record.observed_z - record.fitted_zeta)

    def test_mismatched_fit_rejected(self):
        pf_a = random_portfolio(3, n=20)
        pf_b = random_portfolio(4, n=30)
        result = fit(pf_a, WeightScheme.RATIO, FAM)
        with pytest.raises(ValueError):
            individual_gaps(pf_b, result)

    def test_records_identical_across_schemes_at_full_exposure(self):
        pf = random_portfolio(5, all_full=True)
        config = FitConfig(tolerance=1e-12)
        gaps_o = individual_gaps(pf, fit(pf, WeightScheme.OFFSET, FAM, config))
        gaps_r = individual_gaps(pf, fit(pf, WeightScheme.RATIO, FAM, config))
        for go, gr in zip(gaps_o, gaps_r):
            assert go.fitted_zeta == pytest.approx(gr.fitted_zeta, rel=1e-10)
            assert go.gap == pytest.approx(gr.gap, abs=1e-9)


class TestPortfolioGap:
    def test_ratio_toy_portfolio_balances(self):
        result = fit(toy_portfolio(), WeightScheme.RATIO, FAM, TIGHT)
        assert abs(portfolio_gap(individual_gaps(toy_portfolio(), result))) < 1e-12

    def test_offset_toy_portfolio_value(self):
        # 25 - 1.5 * weighted-mean estimate, evaluated from the closed form
        expected = 25.0 - 1.5 * (math.sqrt(0.5) * 10.0 + 20.0) / (math.sqrt(0.5) + 1.0)
        result = fit(toy_portfolio(), WeightScheme.OFFSET, FAM, TIGHT)
        assert portfolio_gap(individual_gaps(toy_portfolio(), result)) == pytest.approx(
            expected, abs=1e-9
        )

    def test_empty_list_rejected(self):
        with pytest.raises(ValueError):
            portfolio_gap([])


class TestClassReport:
    def test_homogeneous_ratio_portfolio_level_ratio_is_one(self):
        pf = random_portfolio(6, q=0)
        result = fit(pf, WeightScheme.RATIO, FAM, TIGHT)
        rows = class_report(pf, result, 0)
        assert len(rows) == 1
        assert rows[0].single_level
        assert rows[0].ratio == pytest.approx(1.0, abs=1e-12)

    def test_intercept_reduces_to_balance_factor(self):
        pf = random_portfolio(7)
        result = fit(pf, WeightScheme.OFFSET, FAM)
        rows = class_report(pf, result, 0)
        assert rows[0].ratio == pytest.approx(balance_factor(pf, result), rel=1e-12)

    def test_levels_identical_across_schemes_at_full_exposure(self):
        pf = random_portfolio(8, all_full=True)
        config = FitConfig(tolerance=1e-12)
        rows_o = class_report(pf, fit(pf, WeightScheme.OFFSET, FAM, config), 1)
        rows_r = class_report(pf, fit(pf, WeightScheme.RATIO, FAM, config), 1)
        for ro, rr in zip(rows_o, rows_r):
            assert ro.level == rr.level
            assert ro.premium_sum == pytest.approx(rr.premium_sum, rel=1e-9)

    def test_rows_sorted_by_loss_sum(self):
        pf = random_portfolio(9)
        rows = class_report(pf, fit(pf, WeightScheme.RATIO, FAM), 1)
        losses = [row.loss_sum for row in rows]
        assert losses == sorted(losses)

    def test_zero_loss_level_reports_undefined_ratio(self):
        x = np.array([0.0, 0.0, 1.0, 1.0, 0.0, 1.0])
        y = np.array([0.0, 0.0, 5.0, 7.0, 0.0, 3.0])
        pf = Portfolio.from_arrays(np.full(6, 0.5), y, x[:, None])
        result = fit(pf, WeightScheme.RATIO, FAM)
        rows = class_report(pf, result, 1)
        undefined = [row for row in rows if row.ratio is None]
        assert len(undefined) == 1
        assert undefined[0].level == 0.0
        assert undefined[0].premium_sum > 0.0

    def test_ratio_rows_closer_to_balance_than_offset_rows(self):
        experiment = run_gap_experiment(
            ScenarioConfig(n=100, scenario=Scenario.INCREASING, heterogeneous=True, p=1.42, seed=11)
        )
        pf = experiment.synthetic.portfolio

        def total_log_ratio(result):
            total = 0.0
            for j in range(1, pf.q + 1):
                for row in class_report(pf, result, j):
                    if row.ratio:
                        total += abs(math.log(row.ratio))
            return total

        assert total_log_ratio(experiment.fit_ratio) < total_log_ratio(experiment.fit_offset)


class TestGroupSummaries:
    def test_all_full_exposure_single_group(self):
        pf = random_portfolio(12, all_full=True)
        summaries = group_summaries(pf)
        assert len(summaries) == 1
        assert summaries[0].label == "full_exposure"
        assert summaries[0].contract_share == 1.0
        assert summaries[0].mean_exposure == 1.0
        assert summaries[0].loss_cost_reference == pytest.approx(1.0, rel=1e-12)

    def test_mimic_round_trip(self):
        synthetic = gen_mimic_portfolio(0.36, 2000, seed=5)
        summaries = {s.label: s for s in group_summaries(synthetic.portfolio)}
        mid, full = summaries["mid_term"], summaries["full_exposure"]
        assert mid.contract_share == pytest.approx(0.36, abs=1e-12)
        mean_loss = synthetic.portfolio.loss_costs.mean()
        assert mid.loss_cost_reference == pytest.approx(
            synthetic.metadata["mean_midterm"] / mean_loss, rel=1e-9
        )
        assert full.loss_cost_reference == pytest.approx(
            synthetic.metadata["mean_full"] / mean_loss, rel=1e-9
        )

    def test_weighted_references_recombine_to_one(self):
        for seed in range(5):
            pf = random_portfolio(seed + 60, n=50)
            total = sum(s.contract_share * s.loss_cost_reference for s in group_summaries(pf))
            assert total == pytest.approx(1.0, rel=1e-12)

    def test_shares_sum_to_one(self):
        pf = random_portfolio(13)
        assert sum(s.contract_share for s in group_summaries(pf)) == pytest.approx(1.0, abs=1e-12)

    def test_custom_grouping_callable(self):
        pf = random_portfolio(14)
        summaries = group_summaries(pf, grouping=lambda obs: "short" if obs.exposure < 0.5 else "long")
        assert {s.label for s in summaries} <= {"short", "long"}


class TestBalanceFactor:
    def test_homogeneous_ratio_is_one(self):
        pf = random_portfolio(15, q=0)
        result = fit(pf, WeightScheme.RATIO, FAM, TIGHT)
        assert balance_factor(pf, result) == pytest.approx(1.0, abs=1e-12)

    def test_heterogeneous_ratio_near_but_not_exactly_one(self):
        experiment = run_gap_experiment(
            ScenarioConfig(n=100, scenario=Scenario.DECREASING, heterogeneous=True, p=1.42, seed=16)
        )
        factor = balance_factor(experiment.synthetic.portfolio, experiment.fit_ratio)
        assert abs(factor - 1.0) < 0.05
        assert abs(factor - 1.0) > 1e-12

    def test_offset_decreasing_scenario_overshoots(self):
        experiment = run_gap_experiment(
            ScenarioConfig(n=100, scenario=Scenario.DECREASING, heterogeneous=False, p=1.42, seed=17)
        )
        assert balance_factor(experiment.synthetic.portfolio, experiment.fit_offset) > 1.0

    def test_zero_total_loss_rejected(self):
        pf = Portfolio.from_arrays([0.5, 1.0], [1.0, 2.0])
        result = fit(pf, WeightScheme.RATIO, FAM)
        zero_pf = Portfolio.from_arrays([0.5, 1.0], [0.0, 0.0])
        with pytest.raises(ValueError):
            balance_factor(zero_pf, result)


class TestSignLaws:
    @pytest.mark.parametrize("p", [1.2, 1.42, 1.8])
    def test_offset_total_sign_tracks_scenario(self, p):
        increasing = run_gap_experiment(ScenarioConfig(n=100, scenario=Scenario.INCREASING, p=p, seed=18))
        decreasing = run_gap_experiment(ScenarioConfig(n=100, scenario=Scenario.DECREASING, p=p, seed=18))
        assert increasing.total_offset > 0.0
        assert decreasing.total_offset < 0.0
        assert abs(increasing.total_ratio) < abs(increasing.total_offset)
        assert abs(decreasing.total_ratio) < abs(decreasing.total_offset)
