import csv
import io
import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from uplift_sgt.campaign import CampaignSpec, Individual
from uplift_sgt.errors import DegenerateGap, MissingCounterfactuals, MissingModels
from uplift_sgt.fairness import Mode
from uplift_sgt.fileio import dumps_json
from uplift_sgt.harness import (
    CSV_COLUMNS,
    DEFAULT_BUDGETS,
    Strategy,
    SuiteEntry,
    contributions,
    default_entries,
    evaluate_cell,
    evaluate_strategy,
    gap_closed,
    run_suite,
    suite_csv,
    train_models,
)
from uplift_sgt.models import TrainConfig
from uplift_sgt.simulate import (
    NO_TREAT,
    TREAT,
    SimConfig,
    SyntheticCampaign,
    generate_history,
    generate_population,
)

FAST = TrainConfig(max_iters=100)


def pair_campaign(pairs):
    inds = [Individual(i, [float(i)], [float(i)]) for i in range(len(pairs))]
    return SyntheticCampaign(inds, dict(enumerate(pairs)))


class TestGapClosed:
    @pytest.mark.parametrize(
        "uplift, sgt, oracle, expected",
        [(6847, 7778, 7942, 85.0), (8697, 9077, 11126, 16.0)],
    )
    def test_reference_rows(self, uplift, sgt, oracle, expected):
        assert abs(gap_closed(uplift, sgt, oracle) - expected) <= 0.5

    def test_sgt_at_oracle(self):
        assert gap_closed(10.0, 25.0, 25.0) == 100.0

    @pytest.mark.parametrize("oracle", [10.0, 5.0])
    def test_degenerate(self, oracle):
        with pytest.raises(DegenerateGap):
            gap_closed(10.0, 12.0, oracle)

    @given(
        st.floats(-1e4, 1e4), st.floats(-1e4, 1e4), st.floats(1, 1e4),
        st.floats(0.01, 100), st.floats(-1e4, 1e4),
    )
    def test_affine_invariance(self, uplift, sgt, gap, scale, shift):
        oracle = uplift + gap
        base = gap_closed(uplift, sgt, oracle)
        moved = gap_closed(scale * uplift + shift, scale * sgt + shift, scale * oracle + shift)
        assert moved == pytest.approx(base, rel=1e-6, abs=1e-6)


class TestStrategies:
    def test_no_offer_zero_when_nobody_buys_untreated(self):
        camp = pair_campaign([(1, 0), (0, 0), (1, 0)])
        assert evaluate_strategy(Strategy.NO_OFFER, camp, CampaignSpec()).profit == 0.0

    def test_full_offer_not_better_when_cost_exceeds_lifts(self):
        camp = pair_campaign([(1, 0), (0, 0), (1, 1), (0, 1)])
        spec = CampaignSpec(intervention_cost=1.5)
        full = evaluate_strategy(Strategy.FULL_OFFER, camp, spec)
        none = evaluate_strategy(Strategy.NO_OFFER, camp, spec)
        assert full.profit <= none.profit
        assert set(full.actions.values()) == {TREAT}
        assert set(none.actions.values()) == {NO_TREAT}

    def test_profit_is_sum_of_contributions(self, small_campaign, trained_models):
        spec = CampaignSpec(intervention_cost=0.2)
        for s in Strategy:
            out = evaluate_strategy(s, small_campaign, spec, trained_models)
            assert set(out.actions) == set(small_campaign.ids.tolist())
            treat = np.array([out.actions[i] == TREAT for i in small_campaign.ids.tolist()])
            assert out.profit == float(np.sum(contributions(small_campaign, treat, spec)))

    def test_models_required(self, small_campaign):
        with pytest.raises(MissingModels):
            evaluate_strategy(Strategy.UPLIFT, small_campaign, CampaignSpec())

    def test_counterfactuals_required(self):
        camp = SyntheticCampaign([Individual(0, [0.0], [0.0])], {})
        with pytest.raises(MissingCounterfactuals):
            evaluate_strategy(Strategy.ORACLE, camp, CampaignSpec())

    def test_oracle_dominates_on_seeded_campaigns(self):
        spec = CampaignSpec(intervention_cost=0.2)
        for seed in range(100):
            cfg = SimConfig(n_individuals=200, seed=seed)
            models = train_models(generate_history(cfg), TrainConfig(max_iters=30))
            camp = generate_population(cfg)
            profits = {s: evaluate_strategy(s, camp, spec, models).profit for s in Strategy}
            best = profits.pop(Strategy.ORACLE)
            assert all(best >= p - 1e-9 for p in profits.values()), seed


class TestCell:
    def test_cell_contents(self, small_campaign, trained_models):
        cell, selection, labels = evaluate_cell(small_campaign, trained_models, CampaignSpec(budget_fraction=0.1, intervention_cost=0.2))
        assert cell.size == 200 == len(selection.intervention) == len(labels.surrogate_treat)
        g = cell.gap
        assert g.profit_oracle >= max(g.profit_uplift, g.profit_sgt, g.profit_no_offer, g.profit_full_offer)
        assert g.profit_oracle_budgeted >= max(g.profit_uplift, g.profit_sgt)
        modes = [(r.attribute, r.mode) for r in cell.fairness]
        assert modes == [(a, m) for a in ("age", "gender", "income") for m in (Mode.BASE, Mode.ENHANCED)]


@pytest.fixture(scope="module")
def report():
    entries = default_entries(10, 3, SimConfig(n_individuals=400), train=FAST)
    return run_suite(entries, DEFAULT_BUDGETS)


class TestSuite:
    def test_cardinality(self, report):
        gaps = [c["gap"] for camp in report["campaigns"] for c in camp["cells"]]
        assert len(gaps) == 40 and all(g is not None for g in gaps)

    def test_summary_consistent(self, report):
        for row in report["summary"]:
            vals = [
                c["gap"]["imp"] for camp in report["campaigns"] for c in camp["cells"]
                if c["budget"] == row["budget"] and c["gap"]["imp"] is not None
            ]
            assert row["defined"] == len(vals)
            assert row["mean"] == pytest.approx(np.mean(vals))
            assert row["min"] == min(vals) and row["max"] == max(vals)

    def test_json_serialisable(self, report):
        json.loads(dumps_json(report))

    def test_deterministic(self, report):
        entries = default_entries(10, 3, SimConfig(n_individuals=400), train=FAST)
        assert dumps_json(run_suite(entries, DEFAULT_BUDGETS)) == dumps_json(report)

    def test_distinct_campaign_seeds(self, report):
        seeds = [c["sim_config"]["seed"] for c in report["campaigns"]]
        assert len(set(seeds)) == 10

    def test_csv(self, report):
        rows = list(csv.reader(io.StringIO(suite_csv(report))))
        assert tuple(rows[0]) == CSV_COLUMNS
        # 10 campaigns x 4 budgets x 3 attributes x (2 base + 6 enhanced) metrics
        assert len(rows) - 1 == 10 * 4 * 3 * 8

    def test_failing_cell_does_not_abort(self):
        cfg = SimConfig(n_individuals=100, seed=1)
        good = (generate_history(cfg), generate_population(cfg))
        history = generate_history(cfg)
        dead = SyntheticCampaign(history.individuals, {i: (0, 0) for i in history.outcomes})
        entries = [SuiteEntry(cfg, train=FAST), SuiteEntry(cfg, train=FAST)]
        report = run_suite(entries, [0.1, 0.2], campaigns=[(dead, good[1]), good])
        bad_cells = report["campaigns"][0]["cells"]
        assert all(c["error"].startswith("DegenerateLabels") for c in bad_cells)
        assert all(c["error"] is None for c in report["campaigns"][1]["cells"])

    def test_empty_inputs_rejected(self):
        with pytest.raises(ValueError):
            run_suite([], DEFAULT_BUDGETS)
