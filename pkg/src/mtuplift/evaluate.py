"""Uplift curves, AUUC, quantile lift, accuracy and ground-truth policy value."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from ._fileutil import fmt, write_csv_rows
from .errors import ValidationError
from .selection import NONE, Assignment

DEFAULT_BINS = 100


@dataclass(frozen=True, eq=False)
class UpliftCurve:
    fractions: np.ndarray
    cumulative_uplift: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.fractions, dtype=np.float64)
        u = np.asarray(self.cumulative_uplift, dtype=np.float64)
        if len(f) != len(u) or len(f) == 0:
            raise ValidationError("curve arrays must be non-empty and of equal length")
        if np.any(np.diff(f) <= 0) or f[0] <= 0 or f[-1] != 1.0:
            raise ValidationError("fractions must be strictly ascending in (0, 1] and end at 1")
        object.__setattr__(self, "fractions", f)
        object.__setattr__(self, "cumulative_uplift", u)


@dataclass(frozen=True)
class QuantileLift:
    quantile: float
    treated_rate: float
    baseline_rate: float
    lift_ratio: float  # NaN when baseline_rate == 0


@dataclass(frozen=True, eq=False)
class RandomBaseline:
    mean: float
    p95: float
    values: np.ndarray


def _arms(score, treatment, outcome):
    s = np.asarray(score, dtype=np.float64).reshape(-1)
    t = np.asarray(treatment).reshape(-1)
    y = np.asarray(outcome, dtype=np.float64).reshape(-1)
    if not (len(s) == len(t) == len(y)):
        raise ValidationError(f"length mismatch: score={len(s)}, treatment={len(t)}, outcome={len(y)}")
    if not np.all((t == 0) | (t == 1)):
        raise ValidationError("treatment indicator must be 0/1")
    if not (np.any(t == 1) and np.any(t == 0)):
        raise ValidationError("both treated and control rows are required")
    return s, t.astype(np.int8), y


def _prefix_uplift(t_sorted, y_sorted, ends):
    nt, st, nc, sc = _kernels.prefix_arm_stats(t_sorted, y_sorted, ends)
    with np.errstate(invalid="ignore", divide="ignore"):
        diff = st / nt - sc / nc
    # an empty arm in the prefix contributes zero uplift
    return np.where((nt > 0) & (nc > 0), diff, 0.0)


def uplift_curve(score, treatment, outcome, n_bins: int = DEFAULT_BINS) -> UpliftCurve:
    """Treated-minus-control mean outcome over the top ``ceil(b n / n_bins)`` rows.

    Rows are sorted by descending score with ties kept in input order.
    """
    s, t, y = _arms(score, treatment, outcome)
    n = len(s)
    if not 1 <= n_bins <= n:
        raise ValidationError(f"n_bins must be in [1, n={n}], got {n_bins}")
    order = np.argsort(-s, kind="stable")
    b = np.arange(1, n_bins + 1, dtype=np.int64)
    ends = (b * n + n_bins - 1) // n_bins
    return UpliftCurve(ends / n, _prefix_uplift(t[order], y[order], ends))


def auuc(curve: UpliftCurve) -> float:
    """Trapezoidal area under the curve with the origin (0, 0) prepended."""
    x = np.concatenate([[0.0], curve.fractions])
    u = np.concatenate([[0.0], curve.cumulative_uplift])
    return float(np.sum((x[1:] - x[:-1]) * (u[1:] + u[:-1]) / 2.0))


def auuc_score(score, treatment, outcome, n_bins: int = DEFAULT_BINS) -> float:
    return auuc(uplift_curve(score, treatment, outcome, n_bins))


def auuc_random_baseline(
    treatment, outcome, n_shuffles: int = 200, seed: int = 0, n_bins: int = DEFAULT_BINS
) -> RandomBaseline:
    """AUUC distribution of uniform random scores (PCG64 stream from ``seed``)."""
    t = np.asarray(treatment)
    if n_shuffles < 1:
        raise ValidationError("n_shuffles must be >= 1")
    rng = np.random.Generator(np.random.PCG64(int(seed)))
    values = np.array(
        [auuc_score(rng.random(len(t)), t, outcome, n_bins) for _ in range(n_shuffles)]
    )
    return RandomBaseline(float(values.mean()), float(np.percentile(values, 95)), values)


def lift_at_quantile(score, treatment, outcome, q: float) -> QuantileLift:
    """Treated conversion in the top ``ceil(q n)`` rows relative to the
    full-population control conversion."""
    s, t, y = _arms(score, treatment, outcome)
    if not 0.0 < q <= 1.0:
        raise ValidationError(f"q must be in (0, 1], got {q}")
    n = len(s)
    top = int(math.ceil(round(q * n, 9)))
    order = np.argsort(-s, kind="stable")[:top]
    t_top, y_top = t[order], y[order]
    treated_rate = float(y_top[t_top == 1].mean()) if np.any(t_top == 1) else 0.0
    baseline = float(y[t == 0].mean())
    ratio = treated_rate / baseline if baseline > 0 else math.nan
    return QuantileLift(q, treated_rate, baseline, ratio)


def outcome_accuracy(predicted_proba, actual, threshold: float = 0.5) -> float:
    p = np.asarray(predicted_proba, dtype=np.float64).reshape(-1)
    a = np.asarray(actual, dtype=np.float64).reshape(-1)
    if len(p) != len(a):
        raise ValidationError(f"{len(p)} predictions but {len(a)} outcomes")
    if len(p) == 0:
        raise ValidationError("accuracy of an empty set is undefined")
    return float(np.mean((p >= threshold).astype(np.float64) == a))


def policy_value(assignment: Assignment, true_tau, treatment_labels) -> float:
    """Mean true effect harvested by the assignment; ``NONE`` counts as 0."""
    tau = np.asarray(true_tau, dtype=np.float64)
    if tau.ndim == 1:
        tau = tau.reshape(-1, 1)
    labels = [int(t) for t in treatment_labels]
    if tau.shape != (assignment.n, len(labels)):
        raise ValidationError(f"true_tau shape {tau.shape} does not match assignment/labels")
    col = {t: j for j, t in enumerate(labels)}
    unknown = set(np.unique(assignment.assigned).tolist()) - set(labels) - {NONE}
    if unknown:
        raise ValidationError(f"assigned labels {sorted(unknown)} are not columns of true_tau")
    total = np.zeros(assignment.n)
    for t, j in col.items():
        mask = assignment.assigned == t
        total[mask] = tau[mask, j]
    return float(total.mean())


METRICS_HEADER = [
    "model", "treatment", "auuc", "auuc_random_mean",
    "lift_top10", "lift_top20", "accuracy", "ece",
]


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    return fmt(v)


def write_metrics_csv(rows, path) -> None:
    """``rows`` are dicts keyed by METRICS_HEADER; missing values become empty cells."""
    write_csv_rows(path, METRICS_HEADER, ([_cell(r.get(k)) for k in METRICS_HEADER] for r in rows))


def write_curves_csv(curves, path) -> None:
    """``curves`` is an iterable of (model, treatment, UpliftCurve)."""
    out = []
    for model, treatment, curve in curves:
        for f, u in zip(curve.fractions, curve.cumulative_uplift):
            out.append([model, str(int(treatment)), fmt(f), fmt(u)])
    write_csv_rows(path, ["model", "treatment", "fraction", "cumulative_uplift"], out)


def write_policy_csv(rows, path) -> None:
    header = ["model", "strategy", "top_fraction", "policy_value"]
    write_csv_rows(path, header, ([_cell(r[k]) for k in header] for r in rows))
