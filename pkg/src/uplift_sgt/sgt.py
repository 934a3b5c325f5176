"""Surrogate ground truth (SGT) generation.

Step one runs at campaign start: score every individual's lift on start
features, rank, and treat the top ``size`` under the budget. Step two runs at
campaign end, once the KPI has been observed for everybody. Each individual
is re-scored against the model of the arm they were *not* in:

    treated:    surrogate = KPI - C(features_end)
    untreated:  surrogate = T(features_end) - KPI

The population is re-ranked on surrogate lift and the top ``size`` (same cut
as step one) form the surrogate treatment set, the binary answer to "who
should have been treated?".
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from uplift_sgt.campaign import (
    CampaignSpec,
    Individual,
    LiftRanking,
    check_population,
    rank_arrays,
    selection_size,
)
from uplift_sgt.errors import (
    EmptyPopulation,
    MissingEndFeatures,
    MissingKpi,
    MissingTreatment,
    SizeMismatch,
)
from uplift_sgt.models import ResponseModel

Scorer = Callable[[np.ndarray], np.ndarray]


def two_model_scorer(m_treat: ResponseModel, m_control: ResponseModel) -> Scorer:
    def score(X):
        return np.asarray(m_treat.predict_proba(X)) - np.asarray(m_control.predict_proba(X))

    return score


@dataclass(frozen=True, eq=False)
class CampaignSelection:
    """Step-one output. ``population`` carries the treated flags."""

    intervention: frozenset[int]
    no_intervention: frozenset[int]
    ranking_start: LiftRanking
    size: int
    population: tuple[Individual, ...]

    def treated_ids(self) -> frozenset[int]:
        return self.intervention


@dataclass(frozen=True, eq=False)
class SgtLabels:
    surrogate_treat: frozenset[int]
    surrogate_no_treat: frozenset[int]
    surrogate_lift: Mapping[int, float]
    ranking_end: LiftRanking
    treated_in_campaign: frozenset[int]

    def label(self, ind_id: int) -> int:
        return int(ind_id in self.surrogate_treat)

    def labels_for(self, ids: Sequence[int]) -> np.ndarray:
        return np.array([self.label(int(i)) for i in ids], dtype=int)

    def to_csv(self) -> str:
        """CSV text with columns id, surrogate_lift, sgt_label, treated_in_campaign."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["id", "surrogate_lift", "sgt_label", "treated_in_campaign"])
        for ind_id in sorted(self.surrogate_lift):
            writer.writerow(
                [
                    ind_id,
                    repr(float(self.surrogate_lift[ind_id])),
                    self.label(ind_id),
                    int(ind_id in self.treated_in_campaign),
                ]
            )
        return buf.getvalue()


def step_one(
    population: Sequence[Individual],
    m_treat: ResponseModel,
    m_control: ResponseModel,
    spec: CampaignSpec,
    scorer: Scorer | None = None,
) -> CampaignSelection:
    """Select the intervention group at campaign start.

    Args:
      population: individuals with ``features_start``.
      m_treat: treatment response model.
      m_control: control response model.
      spec: campaign settings; only ``budget_fraction`` is used here.
      scorer: lift scorer over the start-feature matrix. Defaults to the
        two-model lift of ``m_treat`` and ``m_control``.
    """
    population = tuple(population)
    if not population:
        raise EmptyPopulation("population is empty")
    check_population(population)
    scorer = scorer or two_model_scorer(m_treat, m_control)
    ids = np.array([ind.id for ind in population], dtype=np.int64)
    X = np.vstack([ind.features_start for ind in population])
    lifts = np.asarray(scorer(X), dtype=float).reshape(-1)
    if lifts.size != ids.size:
        raise SizeMismatch("scorer returned the wrong number of lifts")

    size = selection_size(spec.budget_fraction, ids.size)
    ranking = rank_arrays(ids, lifts).with_cut(size)
    treated = frozenset(ranking.selected)
    marked = tuple(ind.evolve(treated=ind.id in treated) for ind in population)
    return CampaignSelection(
        intervention=treated,
        no_intervention=frozenset(ranking.rest),
        ranking_start=ranking,
        size=size,
        population=marked,
    )


def _require_end_state(ind: Individual) -> None:
    if ind.treated is None:
        raise MissingTreatment(f"individual {ind.id} has no treatment flag")
    if ind.kpi_observed is None:
        raise MissingKpi(f"individual {ind.id} has no observed KPI")
    if ind.features_end is None:
        raise MissingEndFeatures(f"individual {ind.id} has no end-of-campaign features")


def rescore(
    ind: Individual,
    m_treat: ResponseModel,
    m_control: ResponseModel,
    kpi_scale: float = 1.0,
) -> float:
    """Surrogate lift of one individual from the complementary model.

    ``kpi_scale`` converts model probabilities into KPI units (1 for a binary
    KPI).
    """
    _require_end_state(ind)
    if ind.treated:
        return float(ind.kpi_observed - kpi_scale * m_control.predict_proba(ind.features_end))
    return float(kpi_scale * m_treat.predict_proba(ind.features_end) - ind.kpi_observed)


def surrogate_lifts(
    population: Sequence[Individual],
    treated: np.ndarray,
    m_treat: ResponseModel,
    m_control: ResponseModel,
    kpi_scale: float = 1.0,
) -> np.ndarray:
    """Vectorised :func:`rescore`; each model only sees its complementary arm."""
    for ind in population:
        if ind.kpi_observed is None:
            raise MissingKpi(f"individual {ind.id} has no observed KPI")
        if ind.features_end is None:
            raise MissingEndFeatures(f"individual {ind.id} has no end-of-campaign features")
    kpi = np.array([ind.kpi_observed for ind in population], dtype=float)
    X_end = np.vstack([ind.features_end for ind in population])
    out = np.empty(kpi.size)
    if treated.any():
        out[treated] = kpi[treated] - kpi_scale * np.atleast_1d(
            m_control.predict_proba(X_end[treated])
        )
    if (~treated).any():
        out[~treated] = kpi_scale * np.atleast_1d(m_treat.predict_proba(X_end[~treated])) - kpi[~treated]
    return out


def step_two(
    population: Sequence[Individual],
    selection: CampaignSelection,
    m_treat: ResponseModel,
    m_control: ResponseModel,
    kpi_scale: float = 1.0,
) -> SgtLabels:
    """Re-score, re-rank and cut at ``selection.size`` to emit SGT labels.

    Membership in the intervention group comes from ``selection``; the
    population supplies observed KPIs and end features.
    """
    population = tuple(population)
    if not population:
        raise EmptyPopulation("population is empty")
    ids = np.array([ind.id for ind in population], dtype=np.int64)
    covered = selection.intervention | selection.no_intervention
    if set(ids.tolist()) != covered or len(covered) != ids.size:
        raise SizeMismatch("selection does not cover the population exactly")
    if selection.intervention & selection.no_intervention:
        raise SizeMismatch("selection groups overlap")

    treated = np.array([i in selection.intervention for i in ids.tolist()])
    lifts = surrogate_lifts(population, treated, m_treat, m_control, kpi_scale)
    ranking = rank_arrays(ids, lifts).with_cut(selection.size)
    return SgtLabels(
        surrogate_treat=frozenset(ranking.selected),
        surrogate_no_treat=frozenset(ranking.rest),
        surrogate_lift={int(i): float(v) for i, v in zip(ids, lifts)},
        ranking_end=ranking,
        treated_in_campaign=selection.intervention,
    )


def selection_from_flags(population: Sequence[Individual]) -> CampaignSelection:
    """Rebuild a step-one selection from recorded treated flags.

    Used when the campaign ran elsewhere and only its outcome file is
    available; the start ranking is the treated block followed by the rest,
    each in ascending id order, with scores 1 and 0.
    """
    population = tuple(population)
    if not population:
        raise EmptyPopulation("population is empty")
    for ind in population:
        if ind.treated is None:
            raise MissingTreatment(f"individual {ind.id} has no treatment flag")
    ids = np.array([ind.id for ind in population], dtype=np.int64)
    flags = np.array([1.0 if ind.treated else 0.0 for ind in population])
    size = int(flags.sum())
    ranking = rank_arrays(ids, flags).with_cut(size)
    return CampaignSelection(
        intervention=frozenset(ranking.selected),
        no_intervention=frozenset(ranking.rest),
        ranking_start=ranking,
        size=size,
        population=population,
    )
