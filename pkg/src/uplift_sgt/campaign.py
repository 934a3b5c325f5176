"""Campaign domain model: individuals, campaign specs, rankings, quadrants.

Ranking and selection are deterministic. Scores are sorted descending and
equal scores are ordered by ascending id, so the same scores always yield the
same campaign regardless of the order individuals were supplied in.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

from uplift_sgt.errors import (
    EmptyPopulation,
    InvalidConfig,
    NonFiniteScore,
    SizeMismatch,
)


class Quadrant(str, enum.Enum):
    SURE_THING = "SureThing"
    LOST_CAUSE = "LostCause"
    DO_NOT_DISTURB = "DoNotDisturb"
    PERSUADABLE = "Persuadable"


# Order matters: quadrant_mix tuples in the simulator follow it.
QUADRANTS = (
    Quadrant.SURE_THING,
    Quadrant.LOST_CAUSE,
    Quadrant.DO_NOT_DISTURB,
    Quadrant.PERSUADABLE,
)

_QUADRANT_BY_OUTCOMES = {
    (1, 1): Quadrant.SURE_THING,
    (0, 0): Quadrant.LOST_CAUSE,
    (0, 1): Quadrant.DO_NOT_DISTURB,
    (1, 0): Quadrant.PERSUADABLE,
}

QUADRANT_OUTCOMES = {q: pair for pair, q in _QUADRANT_BY_OUTCOMES.items()}


def classify_quadrant(outcome_treated: int, outcome_control: int) -> Quadrant:
    """Map a (treated, control) binary outcome pair to its response quadrant."""
    key = (int(outcome_treated), int(outcome_control))
    if key not in _QUADRANT_BY_OUTCOMES or key != (outcome_treated, outcome_control):
        raise ValueError(
            f"outcomes must be binary, got ({outcome_treated!r}, {outcome_control!r})"
        )
    return _QUADRANT_BY_OUTCOMES[key]


class KpiKind(str, enum.Enum):
    BINARY_PROFITABILITY = "binary_profitability"
    CONTINUOUS_PROFIT = "continuous_profit"


def _frozen_vector(values) -> np.ndarray:
    arr = np.array(values, dtype=float).reshape(-1)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Individual:
    """One member of the campaign population.

    ``features_end`` may be ``None`` until the campaign window closes;
    ``treated`` and ``kpi_observed`` are ``None`` until the campaign launches
    and its outcome is observed.
    """

    id: int
    features_start: np.ndarray
    features_end: np.ndarray | None = None
    protected: Mapping[str, int] = field(default_factory=dict)
    kpi_observed: float | None = None
    treated: bool | None = None

    def __post_init__(self):
        object.__setattr__(self, "features_start", _frozen_vector(self.features_start))
        if self.features_end is not None:
            end = _frozen_vector(self.features_end)
            if end.shape != self.features_start.shape:
                raise InvalidConfig(
                    f"individual {self.id}: features_end has dimension {end.size}, "
                    f"features_start has {self.features_start.size}"
                )
            object.__setattr__(self, "features_end", end)
        for name, value in self.protected.items():
            if value not in (0, 1):
                raise InvalidConfig(
                    f"individual {self.id}: protected attribute {name!r} must be 0 or 1"
                )
        object.__setattr__(
            self, "protected", {k: int(v) for k, v in self.protected.items()}
        )

    def evolve(self, **changes) -> "Individual":
        return replace(self, **changes)


def check_population(population: Sequence[Individual]) -> None:
    """Validate id uniqueness and a common feature dimensionality."""
    seen = set()
    dims = set()
    for ind in population:
        if ind.id in seen:
            raise InvalidConfig(f"duplicate individual id {ind.id}")
        seen.add(ind.id)
        dims.add(ind.features_start.size)
    if len(dims) > 1:
        raise InvalidConfig(f"mixed feature dimensionality in population: {sorted(dims)}")


@dataclass(frozen=True)
class CampaignSpec:
    """Campaign design parameters.

    Attributes:
      budget_fraction: share of the population that may be treated, in (0, 1].
      kpi_kind: how the campaign outcome is measured.
      t_start: campaign start (any orderable timestamp; ints by default).
      t_end: campaign end, strictly after ``t_start``.
      intervention_cost: cost charged per treated individual.
      unit_value: value of one positive binary outcome.
    """

    budget_fraction: float = 0.10
    kpi_kind: KpiKind = KpiKind.BINARY_PROFITABILITY
    t_start: float = 0
    t_end: float = 1
    intervention_cost: float = 0.0
    unit_value: float = 1.0

    def __post_init__(self):
        if not (0.0 < self.budget_fraction <= 1.0):
            raise InvalidConfig(
                f"budget_fraction must be in (0, 1], got {self.budget_fraction}"
            )
        if not self.t_start < self.t_end:
            raise InvalidConfig("t_start must be strictly before t_end")
        if self.intervention_cost < 0:
            raise InvalidConfig("intervention_cost must be >= 0")
        object.__setattr__(self, "kpi_kind", KpiKind(self.kpi_kind))

    def with_budget(self, budget_fraction: float) -> "CampaignSpec":
        return replace(self, budget_fraction=budget_fraction)


@dataclass(frozen=True)
class LiftRanking:
    """Individuals sorted by score, descending, ties by ascending id."""

    ordered_ids: tuple[int, ...]
    scores: tuple[float, ...]
    cut: int = 0

    def __post_init__(self):
        if len(self.ordered_ids) != len(self.scores):
            raise SizeMismatch("ordered_ids and scores differ in length")
        if not 0 <= self.cut <= len(self.ordered_ids):
            raise SizeMismatch(f"cut {self.cut} outside [0, {len(self.ordered_ids)}]")

    def __len__(self):
        return len(self.ordered_ids)

    def with_cut(self, cut: int) -> "LiftRanking":
        return replace(self, cut=cut)

    @property
    def selected(self) -> tuple[int, ...]:
        return self.ordered_ids[: self.cut]

    @property
    def rest(self) -> tuple[int, ...]:
        return self.ordered_ids[self.cut :]


def rank_arrays(ids: np.ndarray, scores: np.ndarray) -> LiftRanking:
    """Array form of :func:`rank_by_score`."""
    ids = np.asarray(ids, dtype=np.int64)
    scores = np.asarray(scores, dtype=float)
    if ids.size == 0:
        raise EmptyPopulation("cannot rank an empty score set")
    if ids.shape != scores.shape:
        raise SizeMismatch("ids and scores differ in shape")
    if not np.all(np.isfinite(scores)):
        bad = ids[~np.isfinite(scores)]
        raise NonFiniteScore(f"non-finite score for ids {bad[:5].tolist()}")
    if np.unique(ids).size != ids.size:
        raise InvalidConfig("duplicate ids in score set")
    # lexsort: last key is primary.
    order = np.lexsort((ids, -scores))
    return LiftRanking(
        ordered_ids=tuple(int(i) for i in ids[order]),
        scores=tuple(float(s) for s in scores[order]),
    )


def rank_by_score(scores: Mapping[int, float]) -> LiftRanking:
    """Rank ids by score descending; equal scores go in ascending id order.

    Raises:
      EmptyPopulation: if ``scores`` is empty.
      NonFiniteScore: if any score is NaN or infinite.
    """
    if not scores:
        raise EmptyPopulation("cannot rank an empty score set")
    ids = np.fromiter(scores.keys(), dtype=np.int64, count=len(scores))
    vals = np.fromiter(scores.values(), dtype=float, count=len(scores))
    return rank_arrays(ids, vals)


def selection_size(budget_fraction: float, n: int) -> int:
    """Number of individuals a budget admits: floor(B*n), at least 1.

    The product is rounded to 9 decimals before flooring so that e.g.
    0.29 * 100 selects 29, not 28.
    """
    if n <= 0:
        raise EmptyPopulation("population is empty")
    if not (0.0 < budget_fraction <= 1.0):
        raise InvalidConfig(f"budget_fraction must be in (0, 1], got {budget_fraction}")
    return max(1, min(n, math.floor(round(budget_fraction * n, 9))))


def select_top_k(
    ranking: LiftRanking, budget_fraction: float, n: int
) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Split a ranking into (intervention ids, complement ids) under a budget."""
    if n == 0:
        raise EmptyPopulation("population is empty")
    if len(ranking) != n:
        raise SizeMismatch(f"ranking covers {len(ranking)} ids, population has {n}")
    cut = ranking.with_cut(selection_size(budget_fraction, n))
    return cut.selected, cut.rest


def population_index(population: Iterable[Individual]) -> dict[int, Individual]:
    return {ind.id: ind for ind in population}
