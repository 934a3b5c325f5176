"""Strategy comparison on synthetic campaigns.

For every (campaign, budget) cell the harness trains treatment and control
response models on a historical population, runs the uplift campaign on a
fresh population, derives SGT labels, and compares realised profit across
five strategies: NoOffer, FullOffer, Oracle, Uplift and SGT. The share of the
Uplift-to-Oracle profit gap that the SGT selection recovers is reported as
``imp``, both against the unbudgeted Oracle (``imp``) and against the best
selection of the same size (``imp_budgeted``).

Fairness of the Uplift decisions is evaluated per protected attribute twice:
label-free (base) and against the SGT labels (enhanced).
"""

from __future__ import annotations

import csv
import enum
import io
import logging
from dataclasses import asdict, dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from uplift_sgt.campaign import CampaignSpec
from uplift_sgt.errors import (
    DegenerateGap,
    MissingCounterfactuals,
    MissingModels,
    UpliftSGTError,
)
from uplift_sgt.fairness import FairnessReport, evaluate_all
from uplift_sgt.models import ResponseModel, TrainConfig, train_logistic
from uplift_sgt.sgt import CampaignSelection, SgtLabels, step_one, step_two
from uplift_sgt.simulate import (
    NO_TREAT,
    TREAT,
    SimConfig,
    SyntheticCampaign,
    generate_history,
    generate_population,
    launch,
    oracle_actions,
)

log = logging.getLogger(__name__)

DEFAULT_BUDGETS = (0.05, 0.10, 0.15, 0.20)
DEFAULT_COST = 0.2


class Strategy(str, enum.Enum):
    NO_OFFER = "NoOffer"
    FULL_OFFER = "FullOffer"
    ORACLE = "Oracle"
    UPLIFT = "Uplift"
    SGT = "SGT"


@dataclass(frozen=True)
class StrategyOutcome:
    strategy: Strategy
    actions: dict[int, str]
    profit: float


@dataclass(frozen=True)
class CampaignModels:
    m_treat: ResponseModel
    m_control: ResponseModel


@dataclass(frozen=True)
class GapReport:
    profit_no_offer: float
    profit_full_offer: float
    profit_oracle: float
    profit_uplift: float
    profit_sgt: float
    imp: float | None
    profit_oracle_budgeted: float | None = None
    imp_budgeted: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def gap_closed(profit_uplift: float, profit_sgt: float, profit_oracle: float) -> float:
    """Percentage of the Uplift-to-Oracle profit gap closed by SGT.

    Raises:
      DegenerateGap: when the Oracle does not beat Uplift.
    """
    gap = profit_oracle - profit_uplift
    if not gap > 0:
        raise DegenerateGap(
            f"oracle profit {profit_oracle} does not exceed uplift profit {profit_uplift}"
        )
    return 100.0 * (profit_sgt - profit_uplift) / gap


def _try_gap(uplift: float, sgt: float, oracle: float) -> float | None:
    try:
        return gap_closed(uplift, sgt, oracle)
    except DegenerateGap:
        return None


def contributions(campaign: SyntheticCampaign, treat: np.ndarray, spec: CampaignSpec) -> np.ndarray:
    """Per-individual profit, aligned with ``campaign.individuals``."""
    if not campaign.outcomes:
        raise MissingCounterfactuals("campaign has no outcome pairs")
    o_t, o_c = campaign.outcome_arrays()
    treat = np.asarray(treat, dtype=bool)
    return spec.unit_value * np.where(treat, o_t, o_c) - spec.intervention_cost * treat


def profit_of(campaign: SyntheticCampaign, treated_ids: Iterable[int], spec: CampaignSpec) -> float:
    treated_ids = set(treated_ids)
    treat = np.array([i in treated_ids for i in campaign.ids.tolist()])
    return float(np.sum(contributions(campaign, treat, spec)))


def _outcome(strategy: Strategy, campaign: SyntheticCampaign, treated_ids, spec) -> StrategyOutcome:
    treated_ids = set(treated_ids)
    actions = {int(i): TREAT if i in treated_ids else NO_TREAT for i in campaign.ids.tolist()}
    return StrategyOutcome(strategy, actions, profit_of(campaign, treated_ids, spec))


def evaluate_strategy(
    strategy: Strategy,
    campaign: SyntheticCampaign,
    spec: CampaignSpec,
    models: CampaignModels | None = None,
    selection: CampaignSelection | None = None,
    labels: SgtLabels | None = None,
) -> StrategyOutcome:
    """Realised profit of one strategy on a campaign.

    Uplift uses ``selection`` when given, otherwise runs step one with
    ``models``. SGT uses ``labels`` when given, otherwise runs both steps.
    """
    strategy = Strategy(strategy)
    if not campaign.outcomes:
        raise MissingCounterfactuals("strategy profits need both outcomes per individual")
    if strategy is Strategy.NO_OFFER:
        return _outcome(strategy, campaign, (), spec)
    if strategy is Strategy.FULL_OFFER:
        return _outcome(strategy, campaign, campaign.ids.tolist(), spec)
    if strategy is Strategy.ORACLE:
        actions, profit = oracle_actions(campaign, spec)
        return StrategyOutcome(strategy, actions, profit)

    if selection is None or (strategy is Strategy.SGT and labels is None):
        if models is None:
            raise MissingModels(f"{strategy.value} needs trained response models")
        if selection is None:
            selection = step_one(campaign.individuals, models.m_treat, models.m_control, spec)
    if strategy is Strategy.UPLIFT:
        return _outcome(strategy, campaign, selection.intervention, spec)
    if labels is None:
        launched = launch(campaign, selection.intervention)
        labels = step_two(launched, selection, models.m_treat, models.m_control)
    return _outcome(strategy, campaign, labels.surrogate_treat, spec)


def train_models(history: SyntheticCampaign, cfg: TrainConfig) -> CampaignModels:
    """Treatment model on treated outcomes, control model on control outcomes."""
    X = history.features_start()
    o_t, o_c = history.outcome_arrays()
    return CampaignModels(train_logistic(X, o_t, cfg), train_logistic(X, o_c, cfg))


@dataclass
class CellResult:
    budget: float
    size: int | None = None
    gap: GapReport | None = None
    fairness: list[FairnessReport] = field(default_factory=list)
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "budget": self.budget,
            "size": self.size,
            "gap": self.gap.to_dict() if self.gap else None,
            "fairness": [r.to_dict() for r in self.fairness],
            "error": self.error,
        }


def evaluate_cell(
    test: SyntheticCampaign, models: CampaignModels, spec: CampaignSpec
) -> tuple[CellResult, CampaignSelection, SgtLabels]:
    """One campaign at one budget: profits, gap closed and fairness reports."""
    selection = step_one(test.individuals, models.m_treat, models.m_control, spec)
    launched = launch(test, selection.intervention)
    labels = step_two(launched, selection, models.m_treat, models.m_control)

    profits = {
        s: evaluate_strategy(s, test, spec, models, selection, labels).profit for s in Strategy
    }
    _, oracle_b = oracle_actions(test, spec, budgeted=True)
    gap = GapReport(
        profit_no_offer=profits[Strategy.NO_OFFER],
        profit_full_offer=profits[Strategy.FULL_OFFER],
        profit_oracle=profits[Strategy.ORACLE],
        profit_uplift=profits[Strategy.UPLIFT],
        profit_sgt=profits[Strategy.SGT],
        imp=_try_gap(profits[Strategy.UPLIFT], profits[Strategy.SGT], profits[Strategy.ORACLE]),
        profit_oracle_budgeted=oracle_b,
        imp_budgeted=_try_gap(profits[Strategy.UPLIFT], profits[Strategy.SGT], oracle_b),
    )

    ids = test.ids.tolist()
    preds = np.array([int(i in selection.intervention) for i in ids])
    sgt_labels = labels.labels_for(ids)
    reports = []
    for name, membership in test.protected_arrays().items():
        reports.append(evaluate_all(preds, None, membership, attribute=name))
        reports.append(evaluate_all(preds, sgt_labels, membership, attribute=name))
    cell = CellResult(budget=spec.budget_fraction, size=selection.size, gap=gap, fairness=reports)
    return cell, selection, labels


@dataclass(frozen=True)
class SuiteEntry:
    sim: SimConfig
    spec: CampaignSpec = CampaignSpec(intervention_cost=DEFAULT_COST)
    train: TrainConfig = TrainConfig()


def run_campaign(
    history: SyntheticCampaign,
    test: SyntheticCampaign,
    spec: CampaignSpec,
    train_cfg: TrainConfig,
    budgets: Sequence[float],
) -> list[CellResult]:
    """All budget cells of one campaign; a failing cell does not stop the rest."""
    try:
        models = train_models(history, train_cfg)
    except UpliftSGTError as err:
        log.warning("training failed: %s", err)
        return [CellResult(budget=b, error=f"{type(err).__name__}: {err}") for b in budgets]
    cells = []
    for b in budgets:
        try:
            cell, _, _ = evaluate_cell(test, models, spec.with_budget(b))
        except UpliftSGTError as err:
            log.warning("cell budget=%s failed: %s", b, err)
            cell = CellResult(budget=b, error=f"{type(err).__name__}: {err}")
        cells.append(cell)
    return cells


def default_entries(
    n_campaigns: int,
    seed: int,
    sim: SimConfig | None = None,
    spec: CampaignSpec | None = None,
    train: TrainConfig | None = None,
) -> list[SuiteEntry]:
    """``n_campaigns`` entries sharing settings, each with its own derived seed."""
    sim = sim or SimConfig()
    spec = spec or CampaignSpec(intervention_cost=DEFAULT_COST)
    train = train or TrainConfig()
    children = np.random.SeedSequence(int(seed) & 0xFFFFFFFFFFFFFFFF).spawn(n_campaigns)
    entries = []
    for child in children:
        s = int(child.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))
        entries.append(SuiteEntry(replace(sim, seed=s), spec, replace(train, seed=s)))
    return entries


def _spec_dict(spec: CampaignSpec) -> dict:
    d = asdict(spec)
    d["kpi_kind"] = spec.kpi_kind.value
    return d


def summarize(campaigns: list[dict], budgets: Sequence[float], key: str = "imp") -> list[dict]:
    """Max / min / mean of ``key`` per budget over campaigns where it is defined."""
    rows = []
    for b in budgets:
        vals = [
            c["gap"][key]
            for camp in campaigns
            for c in camp["cells"]
            if c["budget"] == b and c["gap"] is not None and c["gap"][key] is not None
        ]
        rows.append(
            {
                "budget": b,
                "max": max(vals) if vals else None,
                "min": min(vals) if vals else None,
                "mean": float(np.mean(vals)) if vals else None,
                "defined": len(vals),
            }
        )
    return rows


def run_suite(
    entries: Sequence[SuiteEntry],
    budgets: Sequence[float] = DEFAULT_BUDGETS,
    campaigns: Sequence[tuple[SyntheticCampaign, SyntheticCampaign]] | None = None,
) -> dict:
    """Evaluate every entry at every budget and aggregate gap-closed per budget.

    Args:
      entries: one simulator/campaign/training configuration per campaign.
      budgets: budget fractions evaluated for every campaign.
      campaigns: optional pre-built (history, test) pairs aligned with
        ``entries``; when omitted they are simulated from ``entries``.

    Returns:
      A JSON-ready dict (see ``schemas/suite_report.schema.json``).
    """
    if not entries or not budgets:
        raise ValueError("run_suite needs at least one campaign and one budget")
    budgets = [float(b) for b in budgets]
    out = []
    for idx, entry in enumerate(entries):
        if campaigns is not None:
            history, test = campaigns[idx]
        else:
            history, test = generate_history(entry.sim), generate_population(entry.sim)
        cells = run_campaign(history, test, entry.spec, entry.train, budgets)
        out.append(
            {
                "campaign": idx + 1,
                "sim_config": entry.sim.to_dict(),
                "campaign_spec": _spec_dict(entry.spec),
                "train_config": asdict(entry.train),
                "cells": [c.to_dict() for c in cells],
            }
        )
    return {
        "budgets": budgets,
        "campaigns": out,
        "summary": summarize(out, budgets, "imp"),
        "summary_budgeted": summarize(out, budgets, "imp_budgeted"),
    }


CSV_COLUMNS = (
    "campaign",
    "budget",
    "attribute",
    "mode",
    "metric",
    "value",
    "band",
    "imp",
    "imp_budgeted",
)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def suite_csv(report: dict) -> str:
    """Flat CSV: one row per campaign x budget x attribute x mode x metric."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for camp in report["campaigns"]:
        for cell in camp["cells"]:
            gap = cell["gap"] or {}
            for rep in cell["fairness"]:
                for res in rep["results"]:
                    writer.writerow(
                        [
                            camp["campaign"],
                            _fmt(cell["budget"]),
                            rep["attribute"],
                            rep["mode"],
                            res["metric"],
                            _fmt(res["value"]),
                            _fmt(res["band"]),
                            _fmt(gap.get("imp")),
                            _fmt(gap.get("imp_budgeted")),
                        ]
                    )
    return buf.getvalue()


__all__ = [
    "CampaignModels",
    "CellResult",
    "DEFAULT_BUDGETS",
    "GapReport",
    "Strategy",
    "StrategyOutcome",
    "SuiteEntry",
    "default_entries",
    "evaluate_cell",
    "evaluate_strategy",
    "gap_closed",
    "profit_of",
    "run_campaign",
    "run_suite",
    "suite_csv",
    "train_models",
]
