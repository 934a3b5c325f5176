"""Seeded synthetic campaigns with both potential outcomes per individual.

Each individual gets a latent response quadrant drawn from ``quadrant_mix``.
The quadrant fixes a latent (treated, control) outcome pair, and features are
drawn from quadrant-conditional Gaussians: feature 0 is shifted by
``+-signal`` according to the treated outcome and feature 1 according to the
control outcome, the remaining features are pure noise. Realised outcomes are
the latent ones with each bit flipped independently with probability
``noise_level``; both realised outcomes are kept, so the best action for every
individual is known (the Oracle).

All randomness flows from ``numpy.random.SeedSequence([seed, stream])``;
identical configs give identical campaigns.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace
from typing import Mapping, Sequence

import numpy as np

from uplift_sgt.campaign import (
    QUADRANT_OUTCOMES,
    QUADRANTS,
    CampaignSpec,
    Individual,
    Quadrant,
    classify_quadrant,
    rank_arrays,
    selection_size,
)
from uplift_sgt.errors import InvalidConfig, MissingCounterfactuals

TREAT = "treat"
NO_TREAT = "no_treat"

_STREAM_TEST = 0
_STREAM_HISTORY = 1


def mix_from_positive_rate(rate: float) -> tuple[float, float, float, float]:
    """Default quadrant mix for a treated-response incidence of ``rate``.

    SureThing and Persuadable split the treated positives evenly, DoNotDisturb
    takes ``rate * (1 - rate) / 4`` and LostCause the remainder.
    """
    sure = persuadable = rate / 2.0
    dnd = rate * (1.0 - rate) / 4.0
    lost = 1.0 - sure - persuadable - dnd
    return (sure, lost, dnd, persuadable)


@dataclass(frozen=True)
class SimConfig:
    """Synthetic population settings.

    ``quadrant_mix`` lists target shares in ``QUADRANTS`` order (SureThing,
    LostCause, DoNotDisturb, Persuadable). When omitted it is derived from
    ``positive_rate`` via :func:`mix_from_positive_rate`; when given,
    ``positive_rate`` is informational only.
    """

    n_individuals: int = 17_000
    n_features: int = 8
    seed: int = 0
    quadrant_mix: tuple[float, float, float, float] | None = None
    noise_level: float = 0.1
    drift_magnitude: float = 0.05
    protected_correlation: float = 0.2
    positive_rate: float = 0.2
    signal: float = 1.0
    protected_names: tuple[str, ...] = ("age", "gender", "income")

    def __post_init__(self):
        if self.n_individuals <= 0:
            raise InvalidConfig("n_individuals must be positive")
        if self.n_features <= 0:
            raise InvalidConfig("n_features must be positive")
        if not 0 < self.positive_rate < 1:
            raise InvalidConfig("positive_rate must be in (0, 1)")
        if self.quadrant_mix is not None:
            mix = tuple(float(v) for v in self.quadrant_mix)
            if len(mix) != 4 or any(v < 0 for v in mix):
                raise InvalidConfig("quadrant_mix needs four non-negative shares")
            if abs(sum(mix) - 1.0) > 1e-9:
                raise InvalidConfig(f"quadrant_mix must sum to 1, got {sum(mix)!r}")
            object.__setattr__(self, "quadrant_mix", mix)
        if not 0 <= self.noise_level <= 1:
            raise InvalidConfig("noise_level must be in [0, 1]")
        if self.drift_magnitude < 0:
            raise InvalidConfig("drift_magnitude must be >= 0")
        if not -1 <= self.protected_correlation <= 1:
            raise InvalidConfig("protected_correlation must be in [-1, 1]")
        if self.signal < 0:
            raise InvalidConfig("signal must be >= 0")
        if not self.protected_names or len(set(self.protected_names)) != len(
            self.protected_names
        ):
            raise InvalidConfig("protected_names must be non-empty and unique")
        object.__setattr__(self, "protected_names", tuple(self.protected_names))
        p = self.mix[QUADRANTS.index(Quadrant.PERSUADABLE)]
        if self.protected_correlation != 0 and p in (0.0, 1.0):
            raise InvalidConfig(
                "protected_correlation must be 0 when the Persuadable share is 0 or 1"
            )

    @property
    def mix(self) -> tuple[float, float, float, float]:
        if self.quadrant_mix is not None:
            return self.quadrant_mix
        return mix_from_positive_rate(self.positive_rate)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["quadrant_mix"] = list(self.mix)
        out["protected_names"] = list(self.protected_names)
        return out


@dataclass(frozen=True, eq=False)
class SyntheticCampaign:
    """A population plus both realised outcomes for every individual.

    ``outcomes`` holds the realised (treated, control) pair, i.e. what the KPI
    would show under each action. ``latent_outcomes`` and ``true_quadrant``
    are the noise-free pair and its quadrant; they are ``None`` for campaigns
    re-imported from CSV.
    """

    individuals: tuple[Individual, ...]
    outcomes: Mapping[int, tuple[int, int]]
    latent_outcomes: Mapping[int, tuple[int, int]] | None = None
    true_quadrant: Mapping[int, Quadrant] | None = None
    config: SimConfig | None = None

    def __post_init__(self):
        object.__setattr__(self, "individuals", tuple(self.individuals))
        ids = [ind.id for ind in self.individuals]
        if len(set(ids)) != len(ids):
            raise InvalidConfig("duplicate ids in campaign")

    def __len__(self):
        return len(self.individuals)

    @property
    def ids(self) -> np.ndarray:
        return np.array([ind.id for ind in self.individuals], dtype=np.int64)

    def features_start(self) -> np.ndarray:
        return np.vstack([ind.features_start for ind in self.individuals])

    def features_end(self) -> np.ndarray:
        return np.vstack([ind.features_end for ind in self.individuals])

    def outcome_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Realised (treated, control) outcomes aligned with ``individuals``."""
        pairs = np.array([self.outcomes[ind.id] for ind in self.individuals], dtype=float)
        return pairs[:, 0], pairs[:, 1]

    def protected_arrays(self) -> dict[str, np.ndarray]:
        names = sorted({k for ind in self.individuals for k in ind.protected})
        return {
            name: np.array([ind.protected[name] for ind in self.individuals], dtype=int)
            for name in names
        }


def _seed_seq(seed: int, stream: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, stream])


def _attribute_rates(rho: float, p: float) -> tuple[float, float, bool]:
    """P(A=1 | Z=0), P(A=1 | Z=1) giving corr(A, Z) = rho for Z ~ Bernoulli(p).

    A is kept as close to a 50/50 split as the target correlation allows.
    The returned flag says whether A must be flipped (negative correlation).
    """
    r = abs(rho)
    if r == 0 or p in (0.0, 1.0):
        return 0.5, 0.5, False
    s = math.sqrt(p * (1.0 - p))
    for q in np.linspace(0.5, p, 4001):
        delta = r * math.sqrt(q * (1.0 - q)) / s
        a1 = q + (1.0 - p) * delta
        a0 = q - p * delta
        if a1 <= 1.0 + 1e-12 and a0 >= -1e-12:
            return max(a0, 0.0), min(a1, 1.0), rho < 0
    raise AssertionError("unreachable: q = p is always feasible")


def generate_population(config: SimConfig, stream: int = _STREAM_TEST) -> SyntheticCampaign:
    """Draw a synthetic campaign population.

    Args:
      config: population settings.
      stream: independent random stream under the same seed; the evaluation
        harness uses stream 1 for the historical (training) population.
    """
    rng_q, rng_x, rng_a, rng_noise, rng_drift = (
        np.random.default_rng(s) for s in _seed_seq(config.seed, stream).spawn(5)
    )
    n, d = config.n_individuals, config.n_features

    q_idx = rng_q.choice(len(QUADRANTS), size=n, p=np.asarray(config.mix))
    pairs = np.array([QUADRANT_OUTCOMES[q] for q in QUADRANTS])
    y_t = pairs[q_idx, 0]
    y_c = pairs[q_idx, 1]

    X = rng_x.normal(size=(n, d))
    sign_t = 2.0 * y_t - 1.0
    sign_c = 2.0 * y_c - 1.0
    if d == 1:
        X[:, 0] += config.signal * (sign_t - sign_c)
    else:
        X[:, 0] += config.signal * sign_t
        X[:, 1] += config.signal * sign_c

    persuadable = (q_idx == QUADRANTS.index(Quadrant.PERSUADABLE)).astype(int)
    p_share = config.mix[QUADRANTS.index(Quadrant.PERSUADABLE)]
    a0, a1, flip = _attribute_rates(config.protected_correlation, p_share)
    u = rng_a.random(size=(n, len(config.protected_names)))
    protected = (u < 0.5).astype(int)
    correlated = (u[:, 0] < np.where(persuadable == 1, a1, a0)).astype(int)
    protected[:, 0] = 1 - correlated if flip else correlated

    flips = rng_noise.random(size=(n, 2)) < config.noise_level
    o_t = np.where(flips[:, 0], 1 - y_t, y_t)
    o_c = np.where(flips[:, 1], 1 - y_c, y_c)

    individuals = []
    outcomes, latent, quadrant = {}, {}, {}
    for i in range(n):
        individuals.append(
            Individual(
                id=i,
                features_start=X[i],
                protected=dict(zip(config.protected_names, protected[i].tolist())),
            )
        )
        outcomes[i] = (int(o_t[i]), int(o_c[i]))
        latent[i] = (int(y_t[i]), int(y_c[i]))
        quadrant[i] = QUADRANTS[q_idx[i]]

    campaign = SyntheticCampaign(
        individuals=tuple(individuals),
        outcomes=outcomes,
        latent_outcomes=latent,
        true_quadrant=quadrant,
        config=config,
    )
    drift_seed = int(rng_drift.integers(0, 2**63 - 1))
    return apply_drift(campaign, config.drift_magnitude, drift_seed)


def generate_history(config: SimConfig) -> SyntheticCampaign:
    """Historical population (independent draw) used to train response models."""
    return generate_population(config, stream=_STREAM_HISTORY)


def apply_drift(campaign: SyntheticCampaign, drift_magnitude: float, seed: int) -> SyntheticCampaign:
    """Populate ``features_end`` as ``features_start`` plus N(0, drift^2) noise.

    With ``drift_magnitude == 0`` the end features are an exact copy.
    """
    if drift_magnitude < 0:
        raise InvalidConfig("drift_magnitude must be >= 0")
    X = campaign.features_start()
    if drift_magnitude == 0:
        X_end = X.copy()
    else:
        rng = np.random.default_rng(seed)
        X_end = X + rng.normal(scale=drift_magnitude, size=X.shape)
    individuals = tuple(
        ind.evolve(features_end=X_end[i]) for i, ind in enumerate(campaign.individuals)
    )
    return replace(campaign, individuals=individuals)


def check_quadrant_consistency(campaign: SyntheticCampaign) -> bool:
    if campaign.latent_outcomes is None or campaign.true_quadrant is None:
        return True
    return all(
        classify_quadrant(*campaign.latent_outcomes[i]) == campaign.true_quadrant[i]
        for i in campaign.latent_outcomes
    )


def launch(campaign: SyntheticCampaign, treated_ids) -> tuple[Individual, ...]:
    """Run the campaign: set treated flags and the KPI realised under each action."""
    treated_ids = set(int(i) for i in treated_ids)
    out = []
    for ind in campaign.individuals:
        treated = ind.id in treated_ids
        o_t, o_c = campaign.outcomes[ind.id]
        out.append(ind.evolve(treated=treated, kpi_observed=float(o_t if treated else o_c)))
    return tuple(out)


def contribution(treat: bool, pair: Sequence[float], spec: CampaignSpec) -> float:
    """Profit of one individual under an action, given its realised outcome pair."""
    outcome = pair[0] if treat else pair[1]
    return spec.unit_value * outcome - (spec.intervention_cost if treat else 0.0)


def oracle_actions(
    campaign: SyntheticCampaign, spec: CampaignSpec, budgeted: bool = False
) -> tuple[dict[int, str], float]:
    """Per-individual best action from the realised outcome pairs.

    Unbudgeted (default): treat exactly when treating is strictly more
    profitable. Budgeted: treat the ``selection_size`` individuals with the
    largest treatment gain, ties broken by ascending id, the same cut the
    uplift and SGT selections use.

    Returns:
      (action per id, total profit)
    """
    if not campaign.outcomes:
        raise MissingCounterfactuals("campaign carries no outcome pairs")
    ids = campaign.ids
    o_t, o_c = campaign.outcome_arrays()
    gain = spec.unit_value * (o_t - o_c) - spec.intervention_cost
    if budgeted:
        k = selection_size(spec.budget_fraction, ids.size)
        treat_ids = set(rank_arrays(ids, gain).ordered_ids[:k])
        treat = np.array([i in treat_ids for i in ids.tolist()])
    else:
        treat = gain > 0
    values = spec.unit_value * np.where(treat, o_t, o_c) - spec.intervention_cost * treat
    profit = float(np.sum(values))
    actions = {int(i): TREAT if t else NO_TREAT for i, t in zip(ids, treat)}
    return actions, profit


__all__ = [
    "NO_TREAT",
    "SimConfig",
    "SyntheticCampaign",
    "TREAT",
    "apply_drift",
    "check_quadrant_consistency",
    "contribution",
    "generate_history",
    "generate_population",
    "launch",
    "mix_from_positive_rate",
    "oracle_actions",
]
