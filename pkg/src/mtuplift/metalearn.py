"""S-, T- and X-learner CATE estimators and the multi-treatment wrapper.

A multi-treatment campaign is handled as K independent one-vs-control
problems sharing the control group; each treatment gets its own meta-learner.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .baselearn import FitConfig, LinearModel, OutcomeModel, fit_logistic, fit_propensity, fit_ridge
from .calibrate import DEFAULT_FOLDS, calibrated_fit
from .dataset import CONTROL, CampaignDataset, filter_one_vs_control
from .errors import FitError, ValidationError

KINDS = ("S", "T", "X")
TREATMENT_INDICATOR = "__treatment__"
PROPENSITY_CLIP = (0.01, 0.99)


@dataclass(frozen=True, eq=False)
class FittedMetaModel:
    """One treatment vs. control.  Only the submodels used by ``kind`` are set."""

    kind: str
    feature_names: tuple[str, ...]
    binary_outcome: bool = True
    calibrated: bool = False
    s_model: Optional[OutcomeModel] = None
    mu0: Optional[OutcomeModel] = None
    mu1: Optional[OutcomeModel] = None
    tau0: Optional[LinearModel] = None
    tau1: Optional[LinearModel] = None
    propensity: Optional[LinearModel] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown meta-learner kind {self.kind!r}")
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        required = {
            "S": {"s_model"},
            "T": {"mu0", "mu1"},
            "X": {"mu0", "mu1", "tau0", "tau1", "propensity"},
        }[self.kind]
        for name in ("s_model", "mu0", "mu1", "tau0", "tau1", "propensity"):
            present = getattr(self, name) is not None
            if present != (name in required):
                state = "missing" if name in required else "unexpected"
                raise ValidationError(f"{self.kind}-learner: {state} submodel {name}")


@dataclass(frozen=True, eq=False)
class MultiTreatmentModel:
    kind: str
    feature_names: tuple[str, ...]
    per_treatment: dict[int, FittedMetaModel] = field(default_factory=dict)
    calibrated: bool = False

    @property
    def treatment_labels(self) -> tuple[int, ...]:
        return tuple(sorted(self.per_treatment))


def _check_binary_treatment(dataset: CampaignDataset):
    t = dataset.treatments
    if not np.all((t == 0) | (t == 1)):
        raise ValidationError("meta-learners need treatment labels in {0, 1}; use filter_one_vs_control")
    if not np.any(t == 0):
        raise FitError("no control rows")
    if not np.any(t == 1):
        raise FitError("no treated rows")


def _fit_outcome(X, y, binary, cfg, calibrated, k, seed, names) -> OutcomeModel:
    if not binary:
        if calibrated:
            raise ValidationError("calibration needs binary outcomes")
        return fit_ridge(X, y, cfg.l2, names)
    if calibrated:
        return calibrated_fit(X, y, cfg, k, seed, names)
    return fit_logistic(X, y, cfg, names)


def _with_indicator(X, value):
    return np.column_stack([X, np.full(X.shape[0], float(value))])


def fit_s(
    dataset: CampaignDataset,
    cfg: FitConfig = FitConfig(),
    calibrated: bool = False,
    k: int = DEFAULT_FOLDS,
    seed: int = 0,
) -> FittedMetaModel:
    """Single outcome model on features plus a trailing 0/1 treatment column."""
    _check_binary_treatment(dataset)
    binary = dataset.binary_outcome
    Xa = np.column_stack([dataset.features, dataset.treatments.astype(np.float64)])
    names = (*dataset.feature_names, TREATMENT_INDICATOR)
    model = _fit_outcome(Xa, dataset.outcomes, binary, cfg, calibrated, k, seed, names)
    return FittedMetaModel("S", dataset.feature_names, binary, calibrated, s_model=model)


def _fit_arms(dataset, cfg, calibrated, k, seed):
    _check_binary_treatment(dataset)
    binary = dataset.binary_outcome
    treated = dataset.treatments == 1
    X, y, names = dataset.features, dataset.outcomes, dataset.feature_names
    mu0 = _fit_outcome(X[~treated], y[~treated], binary, cfg, calibrated, k, seed, names)
    mu1 = _fit_outcome(X[treated], y[treated], binary, cfg, calibrated, k, seed, names)
    return binary, mu0, mu1


def fit_t(
    dataset: CampaignDataset,
    cfg: FitConfig = FitConfig(),
    calibrated: bool = False,
    k: int = DEFAULT_FOLDS,
    seed: int = 0,
) -> FittedMetaModel:
    """Separate outcome models on control rows (mu0) and treated rows (mu1)."""
    binary, mu0, mu1 = _fit_arms(dataset, cfg, calibrated, k, seed)
    return FittedMetaModel("T", dataset.feature_names, binary, calibrated, mu0=mu0, mu1=mu1)


def fit_x(
    dataset: CampaignDataset,
    cfg: FitConfig = FitConfig(),
    calibrated: bool = False,
    k: int = DEFAULT_FOLDS,
    seed: int = 0,
) -> FittedMetaModel:
    """X-learner.

    Stage 1 is the T-learner.  Imputed effects ``Y - mu0(x)`` on treated
    rows and ``mu1(x) - Y`` on control rows are regressed on the features
    (ridge) to give tau1 and tau0, which are blended by the fitted propensity
    g(x) as ``g * tau0 + (1 - g) * tau1``.
    """
    binary, mu0, mu1 = _fit_arms(dataset, cfg, calibrated, k, seed)
    treated = dataset.treatments == 1
    X, y, names = dataset.features, dataset.outcomes, dataset.feature_names
    d1 = y[treated] - mu0.predict_mean(X[treated])
    d0 = mu1.predict_mean(X[~treated]) - y[~treated]
    tau1 = fit_ridge(X[treated], d1, cfg.l2, names)
    tau0 = fit_ridge(X[~treated], d0, cfg.l2, names)
    g = fit_propensity(dataset, cfg)
    return FittedMetaModel(
        "X", names, binary, calibrated, mu0=mu0, mu1=mu1, tau0=tau0, tau1=tau1, propensity=g
    )


FITTERS = {"S": fit_s, "T": fit_t, "X": fit_x}


def _check_columns(model: FittedMetaModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.shape[1] != len(model.feature_names):
        raise ValidationError(
            f"model expects {len(model.feature_names)} feature column(s), got {X.shape[1]}"
        )
    return X


def propensity_weight(model: FittedMetaModel, X) -> np.ndarray:
    """X-learner blending weight g(x): fitted propensity clipped to [0.01, 0.99]."""
    X = _check_columns(model, X)
    return np.clip(model.propensity.predict_proba(X), *PROPENSITY_CLIP)


def predict_cate(model: FittedMetaModel, X, propensity_override=None) -> np.ndarray:
    """Per-row CATE estimate for one treatment vs. control.

    ``propensity_override`` replaces g(x) for X-learners (scalar or array,
    used as given without clipping).
    """
    X = _check_columns(model, X)
    if model.kind == "S":
        m = model.s_model
        return m.predict_mean(_with_indicator(X, 1.0)) - m.predict_mean(_with_indicator(X, 0.0))
    if model.kind == "T":
        return model.mu1.predict_mean(X) - model.mu0.predict_mean(X)
    if propensity_override is None:
        g = propensity_weight(model, X)
    else:
        g = np.broadcast_to(np.asarray(propensity_override, dtype=np.float64), (X.shape[0],))
    cate = g * model.tau0.predict(X) + (1.0 - g) * model.tau1.predict(X)
    if model.binary_outcome:
        cate = np.clip(cate, -1.0, 1.0)
    return cate


def predict_outcome(model: FittedMetaModel, X, treated) -> np.ndarray:
    """Expected outcome under the given 0/1 treatment indicator per row."""
    X = _check_columns(model, X)
    treated = np.asarray(treated).astype(bool)
    if model.kind == "S":
        return model.s_model.predict_mean(np.column_stack([X, treated.astype(np.float64)]))
    return np.where(treated, model.mu1.predict_mean(X), model.mu0.predict_mean(X))


def fit_multi_treatment(
    dataset: CampaignDataset,
    kind: str = "T",
    cfg: FitConfig = FitConfig(),
    calibrated: bool = False,
    k: int = DEFAULT_FOLDS,
    seed: int = 0,
) -> MultiTreatmentModel:
    """Fit one ``kind`` meta-learner per non-control label on its {0, t} rows."""
    if kind not in FITTERS:
        raise ValidationError(f"kind must be one of {KINDS}, got {kind!r}")
    labels = dataset.treatment_labels
    if not labels:
        raise FitError("dataset has no treated rows")
    if not np.any(dataset.treatments == CONTROL):
        raise FitError("dataset has no control rows")
    per_treatment = {}
    for t in labels:
        try:
            per_treatment[t] = FITTERS[kind](
                filter_one_vs_control(dataset, t), cfg, calibrated, k, seed
            )
        except FitError as exc:
            raise FitError(str(exc), treatment=t) from exc
        except ValidationError as exc:
            raise ValidationError(f"treatment {t}: {exc}") from exc
    return MultiTreatmentModel(kind, dataset.feature_names, per_treatment, calibrated)


def predict_uplift_matrix(model: MultiTreatmentModel, X) -> np.ndarray:
    """n x K matrix of CATEs; column order follows ascending treatment label."""
    return np.column_stack(
        [predict_cate(model.per_treatment[t], X) for t in model.treatment_labels]
    )
