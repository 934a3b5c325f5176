import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from uplift_sgt.campaign import (
    QUADRANT_OUTCOMES,
    QUADRANTS,
    CampaignSpec,
    Individual,
    KpiKind,
    LiftRanking,
    Quadrant,
    check_population,
    classify_quadrant,
    rank_arrays,
    rank_by_score,
    select_top_k,
    selection_size,
)
from uplift_sgt.errors import (
    EmptyPopulation,
    InvalidConfig,
    NonFiniteScore,
    SizeMismatch,
)

finite = st.floats(allow_nan=False, allow_infinity=False, min_value=-1e6, max_value=1e6)
score_maps = st.dictionaries(st.integers(0, 10_000), finite, min_size=1, max_size=60)
budgets = st.floats(min_value=1e-6, max_value=1.0)
# Coarse grid so that the transforms below stay strictly increasing in floating point.
grid_maps = st.dictionaries(
    st.integers(0, 10_000), st.integers(-800, 800).map(lambda k: k / 8), min_size=1, max_size=60
)


class TestRankByScore:
    def test_tie_broken_by_ascending_id(self):
        assert rank_by_score({1: 0.3, 2: 0.9, 3: 0.3}).ordered_ids == (2, 1, 3)

    def test_singleton(self):
        r = rank_by_score({7: 0.0})
        assert r.ordered_ids == (7,)
        assert r.cut == 0

    @pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
    def test_non_finite_rejected(self, bad):
        with pytest.raises(NonFiniteScore):
            rank_by_score({1: 0.5, 2: bad})

    def test_empty_rejected(self):
        with pytest.raises(EmptyPopulation):
            rank_by_score({})

    def test_duplicate_ids_rejected(self):
        with pytest.raises(InvalidConfig):
            rank_arrays(np.array([1, 1]), np.array([0.1, 0.2]))

    @given(score_maps)
    def test_matches_brute_force_sort(self, scores):
        expected = sorted(scores, key=lambda i: (-scores[i], i))
        r = rank_by_score(scores)
        assert list(r.ordered_ids) == expected
        assert all(a >= b for a, b in zip(r.scores, r.scores[1:]))

    @given(grid_maps)
    def test_invariant_under_monotone_transform(self, scores):
        base = rank_by_score(scores).ordered_ids
        for f in (lambda s: 3.0 * s + 1.0, lambda s: math.atan(s), lambda s: s**3):
            assert rank_by_score({k: f(v) for k, v in scores.items()}).ordered_ids == base

    def test_ranking_rejects_bad_cut(self):
        with pytest.raises(SizeMismatch):
            LiftRanking((1, 2), (0.2, 0.1), cut=3)


class TestSelection:
    @pytest.mark.parametrize(
        "budget, n, expected",
        [(0.10, 10, 1), (0.10, 17_000, 1_700), (0.05, 3, 1), (1.0, 5, 5), (0.29, 100, 29)],
    )
    def test_selection_size(self, budget, n, expected):
        assert selection_size(budget, n) == expected

    def test_size_clamp_exhaustive_small_n(self):
        for n in range(1, 60):
            for b in np.linspace(0.01, 1.0, 100):
                k = selection_size(float(b), n)
                assert k == max(1, math.floor(round(b * n, 9)))
                assert 1 <= k <= n

    def test_top_one_of_ten(self):
        scores = {i: float(i) / 10 for i in range(10)}
        treat, rest = select_top_k(rank_by_score(scores), 0.10, 10)
        assert treat == (9,)
        assert len(rest) == 9

    def test_empty_population(self):
        with pytest.raises(EmptyPopulation):
            selection_size(0.1, 0)

    def test_ranking_must_cover_population(self):
        with pytest.raises(SizeMismatch):
            select_top_k(rank_by_score({1: 0.0, 2: 1.0}), 0.5, 3)

    @pytest.mark.parametrize("budget", [0.0, -0.1, 1.5])
    def test_budget_range(self, budget):
        with pytest.raises(InvalidConfig):
            selection_size(budget, 10)

    @given(score_maps, budgets)
    def test_partition_and_score_order(self, scores, budget):
        treat, rest = select_top_k(rank_by_score(scores), budget, len(scores))
        assert set(treat) | set(rest) == set(scores)
        assert not set(treat) & set(rest)
        assert len(treat) == selection_size(budget, len(scores))
        if rest:
            assert min(scores[i] for i in treat) >= max(scores[i] for i in rest)


class TestQuadrant:
    @pytest.mark.parametrize(
        "pair, quadrant",
        [
            ((1, 0), Quadrant.PERSUADABLE),
            ((1, 1), Quadrant.SURE_THING),
            ((0, 1), Quadrant.DO_NOT_DISTURB),
            ((0, 0), Quadrant.LOST_CAUSE),
        ],
    )
    def test_examples(self, pair, quadrant):
        assert classify_quadrant(*pair) is quadrant

    def test_bijection(self):
        images = {classify_quadrant(t, c) for t in (0, 1) for c in (0, 1)}
        assert images == set(QUADRANTS)
        for q in QUADRANTS:
            assert classify_quadrant(*QUADRANT_OUTCOMES[q]) is q


class TestDomainTypes:
    def test_individual_arrays_read_only(self):
        ind = Individual(1, [1.0, 2.0], [1.5, 2.5], {"age": 1})
        with pytest.raises(ValueError):
            ind.features_start[0] = 9.0

    def test_individual_dimension_mismatch(self):
        with pytest.raises(InvalidConfig):
            Individual(1, [1.0, 2.0], [1.0])

    def test_individual_protected_binary(self):
        with pytest.raises(InvalidConfig):
            Individual(1, [0.0], protected={"age": 2})

    def test_evolve_keeps_original(self):
        ind = Individual(3, [0.0])
        treated = ind.evolve(treated=True, kpi_observed=1.0)
        assert ind.treated is None and treated.treated is True

    def test_population_checks(self):
        with pytest.raises(InvalidConfig):
            check_population([Individual(1, [0.0]), Individual(1, [1.0])])
        with pytest.raises(InvalidConfig):
            check_population([Individual(1, [0.0]), Individual(2, [1.0, 2.0])])

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"budget_fraction": 0.0},
            {"budget_fraction": 1.01},
            {"t_start": 2, "t_end": 1},
            {"intervention_cost": -1.0},
        ],
    )
    def test_spec_invariants(self, kwargs):
        with pytest.raises(InvalidConfig):
            CampaignSpec(**kwargs)

    def test_spec_coerces_kpi_kind(self):
        spec = CampaignSpec(kpi_kind="continuous_profit")
        assert spec.kpi_kind is KpiKind.CONTINUOUS_PROFIT
        assert spec.with_budget(0.2).budget_fraction == 0.2
