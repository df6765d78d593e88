"""Isotonic regression and cross-fitted probability calibration."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .baselearn import FitConfig, LinearModel, fit_logistic
from .errors import FitError, ValidationError

DEFAULT_FOLDS = 5


def pava(values, weights=None) -> np.ndarray:
    """Pool-adjacent-violators: weighted least-squares non-decreasing fit.

    Returns the unique minimizer of ``sum w_i (out_i - values_i)^2`` subject
    to ``out`` being non-decreasing.  Pooled blocks take weighted means.
    """
    v = np.asarray(values, dtype=np.float64).reshape(-1)
    if len(v) < 1:
        raise ValidationError("pava needs at least one value")
    if weights is None:
        w = np.ones_like(v)
    else:
        w = np.asarray(weights, dtype=np.float64).reshape(-1)
        if len(w) != len(v):
            raise ValidationError(f"{len(v)} values but {len(w)} weights")
        if not np.all(w > 0):
            raise ValidationError("pava weights must be strictly positive")
    if not (np.all(np.isfinite(v)) and np.all(np.isfinite(w))):
        raise ValidationError("pava inputs must be finite")
    return _kernels.pava(v, w)


@dataclass(frozen=True, eq=False)
class IsotonicModel:
    """Piecewise-linear non-decreasing map through ``(knots_x, knots_y)``."""

    knots_x: np.ndarray
    knots_y: np.ndarray

    def __post_init__(self):
        kx = np.array(self.knots_x, dtype=np.float64).reshape(-1)
        ky = np.array(self.knots_y, dtype=np.float64).reshape(-1)
        if len(kx) < 1 or len(kx) != len(ky):
            raise ValidationError("knots must be non-empty and of equal length")
        if np.any(np.diff(kx) <= 0):
            raise ValidationError("knots_x must be strictly increasing")
        if np.any(np.diff(ky) < 0):
            raise ValidationError("knots_y must be non-decreasing")
        kx.flags.writeable = False
        ky.flags.writeable = False
        object.__setattr__(self, "knots_x", kx)
        object.__setattr__(self, "knots_y", ky)

    def __call__(self, scores) -> np.ndarray:
        return apply_isotonic(self, scores)


def fit_isotonic(scores, targets, weights=None) -> IsotonicModel:
    """Fit a non-decreasing map from ``scores`` to ``targets`` (in [0, 1]).

    Identical scores are merged into one knot carrying their summed weight
    and weighted-mean target before PAVA.  Interior points of flat runs are
    dropped, which leaves the interpolated function unchanged.
    """
    s = np.asarray(scores, dtype=np.float64).reshape(-1)
    y = np.asarray(targets, dtype=np.float64).reshape(-1)
    if len(s) < 1:
        raise ValidationError("fit_isotonic needs at least one point")
    if len(y) != len(s):
        raise ValidationError(f"{len(s)} scores but {len(y)} targets")
    if not (np.all(np.isfinite(s)) and np.all(np.isfinite(y))):
        raise ValidationError("isotonic inputs must be finite")
    if np.any((y < 0) | (y > 1)):
        raise ValidationError("isotonic targets must lie in [0, 1]")
    w = np.ones_like(s) if weights is None else np.asarray(weights, dtype=np.float64).reshape(-1)

    order = np.argsort(s, kind="stable")
    s, y, w = s[order], y[order], w[order]
    uniq, start = np.unique(s, return_index=True)
    wsum = np.add.reduceat(w, start)
    ysum = np.add.reduceat(w * y, start)
    fitted = pava(ysum / wsum, wsum)
    # the weighted mean can round a hair outside [0, 1]
    fitted = np.clip(fitted, 0.0, 1.0)

    if len(uniq) > 2:
        same_prev = np.r_[False, fitted[1:] == fitted[:-1]]
        same_next = np.r_[fitted[:-1] == fitted[1:], False]
        keep = ~(same_prev & same_next)
        uniq, fitted = uniq[keep], fitted[keep]
    return IsotonicModel(uniq, fitted)


def apply_isotonic(model: IsotonicModel, scores) -> np.ndarray:
    """Linear interpolation between knots, clamped to the end values outside them."""
    return _kernels.isotonic_interp(model.knots_x, model.knots_y, scores)


def fold_assignment(n: int, k: int, seed: int) -> np.ndarray:
    """Fold index per row: a PCG64 permutation dealt round-robin into k folds."""
    rng = np.random.Generator(np.random.PCG64(int(seed)))
    folds = np.empty(n, dtype=np.int64)
    folds[rng.permutation(n)] = np.arange(n) % k
    return folds


@dataclass(frozen=True, eq=False)
class CalibratedLearner:
    """Cross-fitted ensemble of (base logistic model, isotonic calibrator) pairs."""

    folds: tuple[tuple[LinearModel, IsotonicModel], ...]

    def __post_init__(self):
        object.__setattr__(self, "folds", tuple(self.folds))
        if len(self.folds) < 2:
            raise ValidationError("a calibrated learner needs at least 2 folds")

    @property
    def k(self) -> int:
        return len(self.folds)

    @property
    def feature_names(self):
        return self.folds[0][0].feature_names

    def predict_proba(self, X) -> np.ndarray:
        total = None
        for base, iso in self.folds:
            p = apply_isotonic(iso, base.predict_proba(X))
            total = p if total is None else total + p
        return total / self.k

    def predict_mean(self, X) -> np.ndarray:
        return self.predict_proba(X)


def calibrated_fit(
    X, y, cfg: FitConfig = FitConfig(), k: int = DEFAULT_FOLDS, seed: int = 0, feature_names=()
) -> CalibratedLearner:
    """Cross-fitted isotonic calibration of a logistic outcome model.

    For each of ``k`` folds a logistic model is fitted on the other folds and
    an isotonic map is fitted on the held-out fold's (predicted, observed)
    pairs.  Predictions average the calibrated fold models.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    n = len(y)
    if int(k) != k or k < 2:
        raise ValidationError(f"fold count must be an integer >= 2, got {k}")
    if n < 2 * k:
        raise FitError(f"{n} rows are too few for {k}-fold calibration")
    folds = fold_assignment(n, k, seed)
    fitted = []
    for f in range(k):
        held = folds == f
        y_train = y[~held]
        if np.all(y_train == y_train[0]):
            raise FitError(f"calibration fold {f}: training part has a single outcome class")
        base = fit_logistic(X[~held], y_train, cfg, feature_names)
        iso = fit_isotonic(base.predict_proba(X[held]), y[held])
        fitted.append((base, iso))
    return CalibratedLearner(tuple(fitted))


def expected_calibration_error(predicted, actual, n_bins: int = 10) -> float:
    """Equal-width-bin ECE: sum over non-empty bins of (size/n) * |mean p - mean y|."""
    p = np.asarray(predicted, dtype=np.float64).reshape(-1)
    a = np.asarray(actual, dtype=np.float64).reshape(-1)
    if len(p) != len(a):
        raise ValidationError(f"{len(p)} predictions but {len(a)} outcomes")
    if n_bins < 1:
        raise ValidationError("n_bins must be >= 1")
    if len(p) == 0:
        return 0.0
    bins = np.minimum((p * n_bins).astype(np.int64), n_bins - 1)
    bins = np.maximum(bins, 0)
    count = np.bincount(bins, minlength=n_bins)
    p_sum = np.bincount(bins, weights=p, minlength=n_bins)
    a_sum = np.bincount(bins, weights=a, minlength=n_bins)
    nz = count > 0
    gaps = np.abs(p_sum[nz] / count[nz] - a_sum[nz] / count[nz])
    return float(np.sum(count[nz] / len(p) * gaps))
