"""Binary response classifiers and uplift scoring.

The base learner is full-batch, L2-regularised logistic regression trained by
gradient descent. Features are z-scored internally and the fitted weights are
folded back to the raw feature scale, so a :class:`Classifier` always operates
on raw features and serialises to a flat weight vector.

Three uplift scorers are provided:

* two-model: ``p(R | x, T) - p(R | x', C)`` from separate treatment and
  control models;
* dummy-variable: one model with the treatment indicator appended as the last
  feature, scored with the indicator set to 1 and to 0;
* four-quadrant: a one-vs-rest classifier over response quadrants whose
  renormalised Persuadable probability is the ranking score.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, Sequence

import numpy as np

from uplift_sgt.campaign import QUADRANTS, Quadrant
from uplift_sgt.errors import DegenerateLabels, DimensionMismatch, InvalidConfig
from uplift_sgt.fileio import atomic_write_text, dumps_json

_P_MAX = float(np.nextafter(1.0, 0.0))
_P_MIN = float(np.finfo(float).tiny)


class ResponseModel(Protocol):
    """Anything that maps a feature matrix to response probabilities."""

    feature_dim: int

    def predict_proba(self, X) -> np.ndarray | float: ...


@dataclass(frozen=True)
class TrainConfig:
    """Gradient-descent settings.

    ``learning_rate`` is capped at 1/L, L being the smoothness constant of the
    regularised log-loss, which guarantees a non-increasing loss. Set
    ``oversample_ratio`` to ``None`` to train on the raw class balance.
    """

    learning_rate: float = 1.0
    max_iters: int = 500
    tol: float = 1e-9
    l2: float = 1e-4
    oversample_ratio: float | None = 0.5
    jitter: float = 0.01
    standardize: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise InvalidConfig("learning_rate must be > 0")
        if self.max_iters < 0:
            raise InvalidConfig("max_iters must be >= 0")
        if self.tol <= 0:
            raise InvalidConfig("tol must be > 0")
        if self.l2 < 0:
            raise InvalidConfig("l2 must be >= 0")
        if self.oversample_ratio is not None and not 0 < self.oversample_ratio < 1:
            raise InvalidConfig("oversample_ratio must be in (0, 1)")
        if self.jitter < 0:
            raise InvalidConfig("jitter must be >= 0")


@dataclass(frozen=True)
class TrainingMeta:
    seed: int
    iterations: int
    final_loss: float
    step_size: float
    loss_history: tuple[float, ...] = ()


@dataclass(frozen=True, eq=False)
class Classifier:
    """Logistic model over raw features; ``weights[-1]`` is the intercept."""

    weights: np.ndarray
    meta: TrainingMeta | None = None
    kind: str = "logistic"

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).reshape(-1)
        if w.size < 1:
            raise DimensionMismatch("weights must hold at least the intercept")
        if not np.all(np.isfinite(w)):
            raise InvalidConfig("weights must be finite")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def feature_dim(self) -> int:
        return self.weights.size - 1

    def decision_function(self, X) -> np.ndarray:
        X, single = _as_matrix(X, self.feature_dim)
        # Row-wise reduction: a row's score must not depend on the batch it
        # arrives in (BLAS matmul rounds differently for different shapes).
        z = (X * self.weights[:-1]).sum(axis=1) + self.weights[-1]
        return z[0] if single else z

    def predict_proba(self, X):
        p = sigmoid(self.decision_function(X))
        return float(p) if p.ndim == 0 else p

    def to_dict(self) -> dict:
        return {
            "weights": [float(v) for v in self.weights],
            "feature_dim": self.feature_dim,
            "kind": self.kind,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Classifier":
        if data.get("kind", "logistic") != "logistic":
            raise InvalidConfig(f"unsupported model kind {data.get('kind')!r}")
        weights = data["weights"]
        if int(data["feature_dim"]) != len(weights) - 1:
            raise DimensionMismatch(
                f"feature_dim {data['feature_dim']} does not match {len(weights)} weights"
            )
        return cls(weights=np.asarray(weights, dtype=float))


def sigmoid(z) -> np.ndarray:
    """Logistic function clipped to the open interval (0, 1)."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return np.clip(out, _P_MIN, _P_MAX)


def _as_matrix(X, dim: int) -> tuple[np.ndarray, bool]:
    X = np.asarray(X, dtype=float)
    single = X.ndim == 1
    if single:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != dim:
        raise DimensionMismatch(f"expected {dim} features, got shape {X.shape[1:]}")
    return X, single


def predict_proba(model: ResponseModel, features) -> float | np.ndarray:
    """Response probability of ``model`` for one feature vector or a matrix."""
    return model.predict_proba(features)


def _check_labels(y: np.ndarray) -> np.ndarray:
    y = np.asarray(y)
    if y.ndim != 1:
        raise DimensionMismatch("labels must be one-dimensional")
    if not np.all((y == 0) | (y == 1)):
        raise InvalidConfig("labels must be binary (0/1)")
    return y.astype(float)


def oversample_minority(
    X, y, ratio: float = 0.5, seed: int = 0, jitter: float = 0.01
) -> tuple[np.ndarray, np.ndarray]:
    """Duplicate minority-class rows until the minority makes up ``ratio``.

    New rows are copies of randomly chosen minority rows with Gaussian jitter
    of ``jitter`` times each feature's standard deviation; originals keep
    their order at the front. Input already at or above ``ratio`` is returned
    unchanged.

    Raises:
      DegenerateLabels: if only one class is present.
    """
    X = np.asarray(X, dtype=float)
    y = _check_labels(y)
    if X.ndim != 2 or X.shape[0] != y.size:
        raise DimensionMismatch("X must be (n, d) with one label per row")
    if not 0 < ratio < 1:
        raise InvalidConfig("ratio must be in (0, 1)")
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DegenerateLabels("both classes are required for oversampling")
    minority = 1.0 if n_pos < n_neg else 0.0
    n_min, n_maj = min(n_pos, n_neg), max(n_pos, n_neg)
    target = int(round(ratio * n_maj / (1.0 - ratio)))
    extra = target - n_min
    if extra <= 0:
        return X, y
    rng = np.random.default_rng(seed)
    pool = np.flatnonzero(y == minority)
    picks = pool[rng.integers(0, pool.size, size=extra)]
    new_rows = X[picks].copy()
    if jitter > 0:
        scale = jitter * X.std(axis=0)
        new_rows += rng.normal(size=new_rows.shape) * scale
    return np.vstack([X, new_rows]), np.concatenate([y, np.full(extra, minority)])


def _log_loss(Z: np.ndarray, y: np.ndarray, w: np.ndarray, l2: float) -> float:
    z = Z @ w
    data = float(np.mean(np.logaddexp(0.0, z) - y * z))
    return data + 0.5 * l2 * float(w[:-1] @ w[:-1])


def train_logistic(X, y, cfg: TrainConfig = TrainConfig()) -> Classifier:
    """Fit a logistic response model by full-batch gradient descent.

    Args:
      X: (n, d) feature matrix.
      y: length-n binary labels.
      cfg: training settings; oversampling, when enabled, runs first.

    Returns:
      A :class:`Classifier` over raw (unstandardised) features.

    Raises:
      DegenerateLabels: only one class present.
      DimensionMismatch: X and y disagree in length, or X is not 2-D.
    """
    X = np.asarray(X, dtype=float)
    y = _check_labels(y)
    if X.ndim != 2:
        raise DimensionMismatch("X must be a 2-D matrix")
    if X.shape[0] != y.size:
        raise DimensionMismatch(f"{X.shape[0]} rows but {y.size} labels")
    if X.shape[0] < 2:
        raise DegenerateLabels("at least two rows are required")
    if y.min() == y.max():
        raise DegenerateLabels("only one label class present")

    if cfg.oversample_ratio is not None:
        X, y = oversample_minority(X, y, cfg.oversample_ratio, cfg.seed, cfg.jitter)

    n, d = X.shape
    if cfg.standardize:
        mu = X.mean(axis=0)
        sd = X.std(axis=0)
        sd[sd == 0] = 1.0
    else:
        mu = np.zeros(d)
        sd = np.ones(d)
    Z = np.hstack([(X - mu) / sd, np.ones((n, 1))])

    # Smoothness of mean log-loss is at most 0.25 * lambda_max(Z'Z / n).
    lam = float(np.linalg.eigvalsh(Z.T @ Z / n)[-1])
    step = min(cfg.learning_rate, 1.0 / (0.25 * lam + cfg.l2))
    reg = np.full(d + 1, cfg.l2)
    reg[-1] = 0.0

    w = np.zeros(d + 1)
    loss = _log_loss(Z, y, w, cfg.l2)
    history = [loss]
    it = 0
    for it in range(1, cfg.max_iters + 1):
        p = sigmoid(Z @ w)
        grad = Z.T @ (p - y) / n + reg * w
        w = w - step * grad
        new_loss = _log_loss(Z, y, w, cfg.l2)
        history.append(new_loss)
        improved = loss - new_loss
        loss = new_loss
        if improved < cfg.tol:
            break

    coef = w[:-1] / sd
    intercept = w[-1] - float(coef @ mu)
    meta = TrainingMeta(
        seed=cfg.seed,
        iterations=it,
        final_loss=loss,
        step_size=step,
        loss_history=tuple(history),
    )
    return Classifier(weights=np.append(coef, intercept), meta=meta)


def save_model(model: Classifier, path) -> None:
    atomic_write_text(path, dumps_json(model.to_dict()))


def load_model(path) -> Classifier:
    return Classifier.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


# -- uplift scorers ---------------------------------------------------------


def uplift_two_model(m_treat: ResponseModel, m_control: ResponseModel, x, x_control=None):
    """Two-model lift: treatment response minus control response.

    ``x_control`` defaults to ``x`` (both models see the same features).
    """
    if x_control is None:
        x_control = x
    return m_treat.predict_proba(x) - m_control.predict_proba(x_control)


def _with_indicator(x, value: float) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        return np.append(x, value)
    return np.hstack([x, np.full((x.shape[0], 1), value)])


def uplift_dummy(model: ResponseModel, x):
    """Dummy-variable lift; ``model`` takes the treatment flag as its last feature."""
    return model.predict_proba(_with_indicator(x, 1.0)) - model.predict_proba(
        _with_indicator(x, 0.0)
    )


def train_dummy(X, y, treated, cfg: TrainConfig = TrainConfig()) -> Classifier:
    """Train a single response model with the treatment flag appended."""
    treated = np.asarray(treated, dtype=float).reshape(-1, 1)
    return train_logistic(np.hstack([np.asarray(X, dtype=float), treated]), y, cfg)


@dataclass(frozen=True, eq=False)
class DummyArm:
    """View of a dummy-variable model as a single-arm response model."""

    model: ResponseModel
    indicator: float

    @property
    def feature_dim(self) -> int:
        return self.model.feature_dim - 1

    def predict_proba(self, X):
        return self.model.predict_proba(_with_indicator(X, self.indicator))


def dummy_arms(model: ResponseModel) -> tuple[DummyArm, DummyArm]:
    """(treatment arm, control arm) views of a dummy-variable model."""
    return DummyArm(model, 1.0), DummyArm(model, 0.0)


@dataclass(frozen=True, eq=False)
class QuadrantClassifier:
    """One-vs-rest logistic models, one per quadrant, in ``QUADRANTS`` order."""

    members: tuple[Classifier, ...]

    def __post_init__(self):
        if len(self.members) != len(QUADRANTS):
            raise InvalidConfig("a quadrant classifier needs exactly four members")
        dims = {m.feature_dim for m in self.members}
        if len(dims) != 1:
            raise DimensionMismatch("quadrant members disagree on feature dimension")

    @property
    def feature_dim(self) -> int:
        return self.members[0].feature_dim

    def predict_quadrant_proba(self, X) -> np.ndarray:
        """Renormalised class probabilities, columns in ``QUADRANTS`` order."""
        X = np.asarray(X, dtype=float)
        single = X.ndim == 1
        raw = np.column_stack([np.atleast_1d(m.predict_proba(X)) for m in self.members])
        probs = raw / raw.sum(axis=1, keepdims=True)
        return probs[0] if single else probs

    def arm(self, treated: bool) -> "QuadrantArm":
        return QuadrantArm(self, treated)


@dataclass(frozen=True, eq=False)
class QuadrantArm:
    """Response probability under one arm implied by quadrant probabilities.

    Treated response = P(SureThing) + P(Persuadable);
    control response = P(SureThing) + P(DoNotDisturb).
    """

    source: QuadrantClassifier
    treated: bool

    @property
    def feature_dim(self) -> int:
        return self.source.feature_dim

    def predict_proba(self, X):
        probs = self.source.predict_quadrant_proba(X)
        other = Quadrant.PERSUADABLE if self.treated else Quadrant.DO_NOT_DISTURB
        cols = [QUADRANTS.index(Quadrant.SURE_THING), QUADRANTS.index(other)]
        out = probs[..., cols].sum(axis=-1)
        return float(out) if np.ndim(out) == 0 else out


def train_quadrant_classifier(
    X, quadrants: Sequence[Quadrant], cfg: TrainConfig = TrainConfig()
) -> QuadrantClassifier:
    """Fit one one-vs-rest logistic model per quadrant label."""
    labels = np.array([Quadrant(q).value for q in quadrants])
    members = []
    for q in QUADRANTS:
        members.append(train_logistic(X, (labels == q.value).astype(float), cfg))
    return QuadrantClassifier(tuple(members))


def uplift_four_quadrant(model: QuadrantClassifier, x):
    """Renormalised Persuadable probability, used as the ranking score."""
    probs = model.predict_quadrant_proba(x)
    return probs[..., QUADRANTS.index(Quadrant.PERSUADABLE)]


__all__ = [
    "Classifier",
    "DummyArm",
    "QuadrantArm",
    "QuadrantClassifier",
    "ResponseModel",
    "TrainConfig",
    "TrainingMeta",
    "dummy_arms",
    "load_model",
    "oversample_minority",
    "predict_proba",
    "save_model",
    "sigmoid",
    "train_dummy",
    "train_logistic",
    "train_quadrant_classifier",
    "uplift_dummy",
    "uplift_four_quadrant",
    "uplift_two_model",
]
