"""Base learners shared by the meta-learners.

Binary logistic regression (outcome and propensity models) fitted by
full-batch gradient descent, and ridge regression solved exactly from its
normal equations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from . import _kernels
from .errors import FitError, ValidationError

STD_FLOOR = 1e-12
# Largest double below 1; keeps logistic outputs strictly inside (0, 1).
_P_MAX = float(np.nextafter(1.0, 0.0))
_P_MIN = float(np.finfo(np.float64).tiny)
_STALL_RTOL = 1e-14


@dataclass(frozen=True)
class FitConfig:
    l2: float = 1e-3
    max_iter: int = 5000
    tol: float = 1e-8
    learning_rate: float = 0.1

    def __post_init__(self):
        if not (np.isfinite(self.l2) and self.l2 >= 0):
            raise ValidationError(f"l2 must be >= 0, got {self.l2}")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ValidationError(f"max_iter must be a positive integer, got {self.max_iter}")
        if not self.tol > 0:
            raise ValidationError(f"tol must be > 0, got {self.tol}")
        if not self.learning_rate > 0:
            raise ValidationError(f"learning_rate must be > 0, got {self.learning_rate}")


@dataclass(frozen=True, eq=False)
class LinearModel:
    """Affine model ``intercept + X @ weights``; ``kind`` is 'logistic' or 'ridge'."""

    weights: np.ndarray
    intercept: float
    kind: str
    feature_names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if self.kind not in ("logistic", "ridge"):
            raise ValidationError(f"unknown model kind {self.kind!r}")
        w = np.array(self.weights, dtype=np.float64).reshape(-1)
        if not (np.all(np.isfinite(w)) and np.isfinite(self.intercept)):
            raise FitError("model coefficients are not finite")
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "intercept", float(self.intercept))
        object.__setattr__(self, "feature_names", tuple(self.feature_names))

    @property
    def dim(self) -> int:
        return len(self.weights)

    def decision_function(self, X) -> np.ndarray:
        X = _as_matrix(X)
        if X.shape[1] != self.dim:
            raise ValidationError(
                f"model expects {self.dim} feature column(s), got {X.shape[1]}"
            )
        return X @ self.weights + self.intercept

    def predict_proba(self, X) -> np.ndarray:
        return predict_proba(self, X)

    def predict(self, X) -> np.ndarray:
        return predict(self, X)

    def predict_mean(self, X) -> np.ndarray:
        """Expected outcome: a probability for logistic models, a value for ridge."""
        if self.kind == "logistic":
            return predict_proba(self, X)
        return predict(self, X)

    def same_as(self, other: "LinearModel") -> bool:
        return (
            self.kind == other.kind
            and self.intercept == other.intercept
            and np.array_equal(self.weights, other.weights)
            and self.feature_names == other.feature_names
        )


class OutcomeModel(Protocol):
    """What the meta-learners need from a fitted outcome model.

    Any learner (trees, boosting, ...) exposing this method can stand in for
    `LinearModel` or `calibrate.CalibratedLearner`.
    """

    def predict_mean(self, X) -> np.ndarray: ...


def _as_matrix(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    return X


def sigmoid(z) -> np.ndarray:
    """Overflow-safe logistic function."""
    z = np.asarray(z, dtype=np.float64)
    e = np.exp(-np.abs(z))
    return np.where(z >= 0.0, 1.0 / (1.0 + e), e / (1.0 + e))


def predict_proba(model: LinearModel, X) -> np.ndarray:
    if model.kind != "logistic":
        raise ValidationError("predict_proba needs a logistic model")
    return np.clip(sigmoid(model.decision_function(X)), _P_MIN, _P_MAX)


def predict(model: LinearModel, X) -> np.ndarray:
    if model.kind != "ridge":
        raise ValidationError("predict needs a ridge model; use predict_proba for logistic")
    return model.decision_function(X)


def logistic_objective(X, y, weights, intercept, l2):
    """Mean log-loss plus ``l2/2 * ||weights||^2`` and its gradient.

    Returns ``(loss, grad_weights, grad_intercept)``.  The intercept is not
    penalized.
    """
    X = np.ascontiguousarray(_as_matrix(X))
    w = np.asarray(weights, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    loss, gw, gb = _kernels.logistic_loss_grad(X, y, w, float(intercept))
    return loss + 0.5 * l2 * float(w @ w), gw + l2 * w, gb


@dataclass(frozen=True, eq=False)
class LogisticFit:
    """A fitted logistic model with its descent trace."""

    model: LinearModel
    n_iter: int
    converged: bool
    losses: np.ndarray


def _check_binary(y, what="y"):
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if not np.all((y == 0.0) | (y == 1.0)):
        raise ValidationError(f"{what} must contain only 0 and 1")
    return y


def logistic_descent(X, y, cfg: FitConfig = FitConfig(), feature_names=()) -> LogisticFit:
    """Minimize penalized mean log-loss by gradient descent.

    The fit runs on internally standardized features (column mean/std from
    the training data) and the penalty applies to the standardized
    coefficients, which are mapped back to the raw scale afterwards.  On raw
    weights the penalty is therefore ``cfg.l2/2 * sum (w_j * std_j)^2``.
    Constant columns get weight 0.  A step that increases the objective is
    rejected and the learning rate halved.  Stops when the gradient
    infinity-norm (standardized parameterization) drops below ``cfg.tol``,
    when a rejected step's predicted decrease is below the loss's rounding
    noise, or after ``cfg.max_iter`` iterations.
    """
    X = _as_matrix(X)
    y = _check_binary(y)
    n, d = X.shape
    if n < 1:
        raise ValidationError("need at least one row to fit")
    if len(y) != n:
        raise ValidationError(f"X has {n} rows but y has {len(y)}")
    if not np.all(np.isfinite(X)):
        raise ValidationError("X contains non-finite values")

    mean = X.mean(axis=0)
    std = X.std(axis=0)
    active = std >= STD_FLOOR
    mu = mean[active]
    sd = std[active]
    Xs = np.ascontiguousarray((X[:, active] - mu) / sd)
    l2 = cfg.l2

    def objective(w, b):
        loss, gw, gb = _kernels.logistic_loss_grad(Xs, y, w, b)
        return loss + 0.5 * l2 * float(w @ w), gw + l2 * w, gb

    w = np.zeros(Xs.shape[1])
    b = 0.0
    f, gw, gb = objective(w, b)
    lr = cfg.learning_rate
    losses = [f]
    converged = False
    it = 0
    while it < cfg.max_iter:
        gnorm = max(float(np.max(np.abs(gw), initial=0.0)), abs(gb))
        if gnorm < cfg.tol:
            converged = True
            break
        it += 1
        w_new = w - lr * gw
        b_new = b - lr * gb
        f_new, gw_new, gb_new = objective(w_new, b_new)
        if f_new > f or not np.isfinite(f_new):
            # the predicted decrease is below the rounding noise of the loss
            if lr * (float(gw @ gw) + gb * gb) <= _STALL_RTOL * max(abs(f), 1.0):
                converged = True
                break
            lr *= 0.5
            continue
        w, b, f, gw, gb = w_new, b_new, f_new, gw_new, gb_new
        losses.append(f)

    raw_w = np.zeros(d)
    raw_w[active] = w / sd
    raw_b = b - float(raw_w[active] @ mu)
    model = LinearModel(raw_w, raw_b, "logistic", feature_names)
    return LogisticFit(model, it, converged, np.array(losses))


def fit_logistic(X, y, cfg: FitConfig = FitConfig(), feature_names=()) -> LinearModel:
    """Fit an L2-penalized logistic regression; see `logistic_descent`."""
    return logistic_descent(X, y, cfg, feature_names).model


def fit_ridge(X, y, l2: float = 0.0, feature_names=()) -> LinearModel:
    """Solve ``min sum (y - a - X w)^2 + l2 ||w||^2`` exactly (intercept unpenalized)."""
    X = _as_matrix(X)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    n, d = X.shape
    if n < 1:
        raise ValidationError("need at least one row to fit")
    if len(y) != n:
        raise ValidationError(f"X has {n} rows but y has {len(y)}")
    if l2 < 0:
        raise ValidationError(f"l2 must be >= 0, got {l2}")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ValidationError("ridge inputs contain non-finite values")
    x_bar = X.mean(axis=0)
    y_bar = float(y.mean())
    Xc = X - x_bar
    A = Xc.T @ Xc + l2 * np.eye(d)
    rhs = Xc.T @ (y - y_bar)
    if d:
        if l2 == 0 and np.linalg.matrix_rank(Xc) < d:
            raise FitError("singular ridge system: rank-deficient X with l2 = 0")
        w = np.linalg.solve(A, rhs)
    else:
        w = np.zeros(0)
    return LinearModel(w, y_bar - float(x_bar @ w), "ridge", feature_names)


def fit_propensity(dataset, cfg: FitConfig = FitConfig()) -> LinearModel:
    """Logistic model of P(T = 1 | X) on a binary-treatment dataset."""
    t = np.asarray(dataset.treatments)
    if not np.all((t == 0) | (t == 1)):
        raise ValidationError("propensity model needs treatment labels in {0, 1}")
    if np.all(t == 1) or np.all(t == 0):
        raise FitError("propensity model needs both treated and control rows")
    return fit_logistic(dataset.features, t.astype(np.float64), cfg, dataset.feature_names)
