"""Binary group-fairness metrics for campaign decisions.

Group coding is fixed: ``A = 1`` is the group of interest. In the rate
difference metrics (AO, EO, FNR difference, PE) "group 1" is ``A = 1`` and
"group 2" is ``A = 0``; statistical parity and disparate impact put ``A = 0``
first, i.e. ``P(Y^=1 | A=0) - P(Y^=1 | A=1)`` and ``P(Y^=1 | A=0) /
P(Y^=1 | A=1)``.

Every metric is computed from per-group confusion counts. Differences of two
ratios ``a/b - c/d`` are evaluated as ``(a*d - c*b) / (b*d)`` on integer
counts, so each value carries a single rounding. As a consequence EO and the
FNR difference are exact negatives of each other and swapping the groups
negates the difference metrics bit for bit.

Undefined rates raise typed errors; NaN never leaves this module.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from uplift_sgt.errors import (
    EmptyGroup,
    LengthMismatch,
    NonBinaryInput,
    UndefinedRate,
    UpliftSGTError,
    ZeroDenominator,
)


class Metric(str, enum.Enum):
    SP = "SP"
    DI = "DI"
    AO = "AO"
    EO = "EO"
    FNR_DIFF = "FNRDiff"
    PE = "PE"


class Band(str, enum.Enum):
    WITHIN_IDEAL = "within_ideal"
    OUTSIDE_IDEAL = "outside_ideal"


class Mode(str, enum.Enum):
    BASE = "base"
    ENHANCED = "enhanced"


LABEL_FREE = (Metric.SP, Metric.DI)
ALL_METRICS = (Metric.SP, Metric.DI, Metric.AO, Metric.EO, Metric.FNR_DIFF, Metric.PE)

# Closed acceptance intervals around each metric's ideal value.
BOUNDS = {
    Metric.DI: (0.8, 1.2),
    Metric.SP: (-0.2, 0.2),
    Metric.AO: (-0.2, 0.2),
    Metric.EO: (-0.2, 0.2),
    Metric.FNR_DIFF: (-0.2, 0.2),
    Metric.PE: (-0.2, 0.2),
}


def requires_labels(metric: Metric) -> bool:
    return Metric(metric) not in LABEL_FREE


def classify_band(metric: Metric, value: float) -> Band:
    """Place a metric value inside or outside its ideal interval (inclusive)."""
    value = float(value)
    if not np.isfinite(value):
        raise ValueError(f"cannot classify non-finite value {value!r}")
    lo, hi = BOUNDS[Metric(metric)]
    return Band.WITHIN_IDEAL if lo <= value <= hi else Band.OUTSIDE_IDEAL


# -- counting ---------------------------------------------------------------

# Cell order inside each group.
TP, FP, TN, FN = range(4)


def _as_binary(name: str, values) -> np.ndarray:
    arr = np.asarray(values)
    if arr.dtype == bool:
        return arr.astype(np.int64)
    if not np.all((arr == 0) | (arr == 1)):
        raise NonBinaryInput(f"{name} must contain only 0 and 1")
    return arr.astype(np.int64)


def confusion_counts(preds, labels, membership) -> np.ndarray:
    """Confusion counts per group.

    Inputs may carry leading batch dimensions; the last axis indexes
    individuals. Returns an int array of shape ``(..., 2, 4)`` indexed by
    group ``A`` then cell ``(TP, FP, TN, FN)``.
    """
    p = _as_binary("preds", preds)
    y = _as_binary("labels", labels)
    a = _as_binary("membership", membership)
    if not (p.shape == y.shape == a.shape):
        raise LengthMismatch(f"shapes differ: preds {p.shape}, labels {y.shape}, membership {a.shape}")
    batch_shape = p.shape[:-1]
    n_batch = int(np.prod(batch_shape)) if batch_shape else 1
    # cell index: TP=0 (y1,p1), FP=1 (y0,p1), TN=2 (y0,p0), FN=3 (y1,p0)
    cell = np.where(p == 1, 1 - y, 2 + y)
    code = a * 4 + cell
    offsets = (np.arange(n_batch) * 8).reshape(batch_shape + (1,)) if batch_shape else 0
    flat = np.bincount((code + offsets).reshape(-1), minlength=n_batch * 8)
    return flat.reshape(batch_shape + (2, 4))


@dataclass(frozen=True)
class GroupConfusion:
    """Confusion counts for ``A = 0`` (``group0``) and ``A = 1`` (``group1``)."""

    group0: tuple[int, int, int, int]
    group1: tuple[int, int, int, int]

    @classmethod
    def from_counts(cls, counts: np.ndarray) -> "GroupConfusion":
        counts = np.asarray(counts)
        return cls(tuple(int(v) for v in counts[0]), tuple(int(v) for v in counts[1]))

    def counts(self) -> np.ndarray:
        return np.array([self.group0, self.group1], dtype=np.int64)

    def group(self, a: int) -> dict[str, int]:
        tp, fp, tn, fn = self.group1 if a else self.group0
        return {"tp": tp, "fp": fp, "tn": tn, "fn": fn}

    def size(self, a: int) -> int:
        return sum(self.group1 if a else self.group0)

    def swapped(self) -> "GroupConfusion":
        return GroupConfusion(self.group1, self.group0)

    def rate(self, name: str, a: int) -> float:
        """TPR, FPR or FNR of one group; raises :class:`UndefinedRate`."""
        g = self.group(a)
        num, den = {
            "TPR": (g["tp"], g["tp"] + g["fn"]),
            "FPR": (g["fp"], g["fp"] + g["tn"]),
            "FNR": (g["fn"], g["fn"] + g["tp"]),
        }[name]
        if den == 0:
            raise UndefinedRate(f"{name}[A={a}]")
        return num / den


def group_confusion(preds, labels, membership) -> GroupConfusion:
    p, y, a = (np.asarray(v) for v in (preds, labels, membership))
    if p.ndim != 1:
        raise LengthMismatch("group_confusion expects one-dimensional inputs")
    return GroupConfusion.from_counts(confusion_counts(p, y, a))


# -- vectorised metric core -------------------------------------------------


def _ratio_diff(a, b, c, d):
    """a/b - c/d as a single rounding; ``defined`` where b*d != 0."""
    den = b * d
    defined = den != 0
    num = a * d - c * b
    out = np.divide(num, den, out=np.zeros(np.shape(num), dtype=float), where=defined)
    return out, defined


def metric_arrays(counts: np.ndarray) -> dict[Metric, tuple[np.ndarray, np.ndarray]]:
    """All six metrics from ``(..., 2, 4)`` counts.

    Returns ``{metric: (values, defined)}``; entries where ``defined`` is
    False hold 0.0 and must not be read.
    """
    c = np.asarray(counts, dtype=np.int64)
    g0, g1 = c[..., 0, :], c[..., 1, :]
    tp0, fp0, tn0, fn0 = (g0[..., k] for k in range(4))
    tp1, fp1, tn1, fn1 = (g1[..., k] for k in range(4))
    n0 = tp0 + fp0 + tn0 + fn0
    n1 = tp1 + fp1 + tn1 + fn1
    pos0, pos1 = tp0 + fp0, tp1 + fp1
    actual_pos0, actual_pos1 = tp0 + fn0, tp1 + fn1
    actual_neg0, actual_neg1 = fp0 + tn0, fp1 + tn1

    sp, sp_ok = _ratio_diff(pos0, n0, pos1, n1)
    di_num = pos0 * n1
    di_den = pos1 * n0
    di_ok = (n0 > 0) & (n1 > 0) & (pos1 > 0)
    di = np.divide(di_num, di_den, out=np.zeros(np.shape(di_num), dtype=float), where=di_ok)
    eo, eo_ok = _ratio_diff(tp1, actual_pos1, tp0, actual_pos0)
    fnr, fnr_ok = _ratio_diff(fn1, actual_pos1, fn0, actual_pos0)
    pe, pe_ok = _ratio_diff(fp1, actual_neg1, fp0, actual_neg0)
    ao = 0.5 * (pe + eo)
    return {
        Metric.SP: (sp, sp_ok),
        Metric.DI: (di, di_ok),
        Metric.AO: (ao, pe_ok & eo_ok),
        Metric.EO: (eo, eo_ok),
        Metric.FNR_DIFF: (fnr, fnr_ok),
        Metric.PE: (pe, pe_ok),
    }


# -- scalar API -------------------------------------------------------------


@dataclass(frozen=True)
class MetricResult:
    metric: Metric
    value: float | None
    band: Band | None
    requires_labels: bool
    diagnostic: str | None = None

    @classmethod
    def of(cls, metric: Metric, value: float) -> "MetricResult":
        return cls(metric, float(value), classify_band(metric, value), requires_labels(metric))

    def to_dict(self) -> dict:
        return {
            "metric": self.metric.value,
            "value": self.value,
            "band": self.band.value if self.band is not None else None,
            "requires_labels": self.requires_labels,
            "diagnostic": self.diagnostic,
        }


def _predictions_only(preds, membership) -> np.ndarray:
    p = _as_binary("preds", preds)
    a = _as_binary("membership", membership)
    if p.shape != a.shape or p.ndim != 1:
        raise LengthMismatch(f"preds {p.shape} and membership {a.shape} must be equal 1-D")
    counts = confusion_counts(p, np.zeros_like(p), a)
    for g in (0, 1):
        if counts[g].sum() == 0:
            raise EmptyGroup(f"group A={g} has no members")
    return counts


def statistical_parity(preds, membership) -> MetricResult:
    """P(Y^=1 | A=0) - P(Y^=1 | A=1)."""
    values = metric_arrays(_predictions_only(preds, membership))
    return MetricResult.of(Metric.SP, values[Metric.SP][0])


def disparate_impact(preds, membership) -> MetricResult:
    """P(Y^=1 | A=0) / P(Y^=1 | A=1); zero denominator is a typed error."""
    counts = _predictions_only(preds, membership)
    value, ok = metric_arrays(counts)[Metric.DI]
    if not ok:
        raise ZeroDenominator("no predicted positives in group A=1")
    return MetricResult.of(Metric.DI, value)


def _require_rates(conf: GroupConfusion, *names: str) -> None:
    for name in names:
        for a in (1, 0):
            conf.rate(name, a)


def _from_confusion(conf: GroupConfusion, metric: Metric, rates: tuple[str, ...]) -> MetricResult:
    _require_rates(conf, *rates)
    value, _ = metric_arrays(conf.counts())[metric]
    return MetricResult.of(metric, value)


def average_odds(conf: GroupConfusion) -> MetricResult:
    """0.5 * [(FPR_1 - FPR_0) + (TPR_1 - TPR_0)]."""
    return _from_confusion(conf, Metric.AO, ("FPR", "TPR"))


def equal_opportunity(conf: GroupConfusion) -> MetricResult:
    """TPR_1 - TPR_0."""
    return _from_confusion(conf, Metric.EO, ("TPR",))


def fnr_difference(conf: GroupConfusion) -> MetricResult:
    """FNR_1 - FNR_0."""
    return _from_confusion(conf, Metric.FNR_DIFF, ("FNR",))


def predictive_equality(conf: GroupConfusion) -> MetricResult:
    """FPR_1 - FPR_0."""
    return _from_confusion(conf, Metric.PE, ("FPR",))


_CONFUSION_METRICS = {
    Metric.AO: average_odds,
    Metric.EO: equal_opportunity,
    Metric.FNR_DIFF: fnr_difference,
    Metric.PE: predictive_equality,
}


@dataclass(frozen=True)
class FairnessReport:
    attribute: str
    mode: Mode
    results: tuple[MetricResult, ...]

    def result(self, metric: Metric) -> MetricResult:
        for r in self.results:
            if r.metric == Metric(metric):
                return r
        raise KeyError(metric)

    def to_dict(self) -> dict:
        return {
            "attribute": self.attribute,
            "mode": self.mode.value,
            "results": [r.to_dict() for r in self.results],
        }


def _undefined(metric: Metric, err: Exception) -> MetricResult:
    return MetricResult(metric, None, None, requires_labels(metric), f"{type(err).__name__}: {err}")


def evaluate_all(preds, labels, membership, attribute: str = "A") -> FairnessReport:
    """Fairness report for one protected attribute.

    Without labels only SP and DI are computed (base mode); with labels all
    six (enhanced mode). A metric that cannot be computed is reported with a
    ``diagnostic`` instead of a value, so the rest of the report survives.
    """
    p = _as_binary("preds", preds)
    a = _as_binary("membership", membership)
    if p.shape != a.shape or p.ndim != 1:
        raise LengthMismatch(f"preds {p.shape} and membership {a.shape} must be equal 1-D")
    results = []
    for metric, fn in ((Metric.SP, statistical_parity), (Metric.DI, disparate_impact)):
        try:
            results.append(fn(p, a))
        except UpliftSGTError as err:
            results.append(_undefined(metric, err))
    if labels is None:
        return FairnessReport(attribute, Mode.BASE, tuple(results))

    y = _as_binary("labels", labels)
    if y.shape != p.shape:
        raise LengthMismatch(f"labels {y.shape} and preds {p.shape} differ")
    conf = group_confusion(p, y, a)
    for metric, fn in _CONFUSION_METRICS.items():
        try:
            results.append(fn(conf))
        except UpliftSGTError as err:
            results.append(_undefined(metric, err))
    return FairnessReport(attribute, Mode.ENHANCED, tuple(results))
