"""Synthetic multi-treatment RCTs with known per-treatment effects.

Randomness comes from numpy's PCG64 bit generator.  A config's seed feeds a
``SeedSequence`` that is split with ``spawn`` into three independent child
streams, used in this order: features, treatment assignment, outcome
draws.  Output is bit-identical for a given seed and numpy release.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from ._fileutil import fmt, write_csv_rows
from .baselearn import sigmoid
from .dataset import CampaignDataset
from .errors import DatasetError, ValidationError

P_CLIP = (0.01, 0.99)


@dataclass(frozen=True)
class ConstantTau:
    value: float

    def __call__(self, X, base_logit):
        return np.full(X.shape[0], float(self.value))


@dataclass(frozen=True)
class LinearTau:
    """``intercept + X @ weights``, clipped to ``[lower, upper]``."""

    intercept: float
    weights: tuple[float, ...]
    lower: float = -np.inf
    upper: float = np.inf

    def __call__(self, X, base_logit):
        w = np.asarray(self.weights, dtype=np.float64)
        if len(w) != X.shape[1]:
            raise ValidationError(f"linear tau has {len(w)} weights for {X.shape[1]} features")
        return np.clip(self.intercept + X @ w, self.lower, self.upper)


@dataclass(frozen=True)
class StepTau:
    """``high`` where feature > threshold, else ``low``."""

    feature: int
    threshold: float
    low: float
    high: float

    def __call__(self, X, base_logit):
        return np.where(X[:, self.feature] > self.threshold, self.high, self.low)


@dataclass(frozen=True)
class SigmoidTau:
    """``offset + scale * sigmoid(slope * x_feature)``."""

    offset: float
    scale: float
    slope: float
    feature: int

    def __call__(self, X, base_logit):
        return self.offset + self.scale * sigmoid(self.slope * X[:, self.feature])


@dataclass(frozen=True)
class LogitShiftTau:
    """Treatment adds ``shift`` on the logit scale of the base rate."""

    shift: float

    def __call__(self, X, base_logit):
        return sigmoid(base_logit + self.shift) - sigmoid(base_logit)


TauSpec = Union[ConstantTau, LinearTau, StepTau, SigmoidTau, LogitShiftTau]


@dataclass(frozen=True)
class GeneratorConfig:
    n: int
    d: int
    assignment_probs: tuple[float, ...]
    base_weights: tuple[float, ...]
    base_intercept: float
    tau_specs: tuple[TauSpec, ...]
    seed: int = 0
    id_prefix: str = "c"

    def __post_init__(self):
        object.__setattr__(self, "assignment_probs", tuple(float(p) for p in self.assignment_probs))
        object.__setattr__(self, "base_weights", tuple(float(w) for w in self.base_weights))
        object.__setattr__(self, "tau_specs", tuple(self.tau_specs))
        if int(self.n) != self.n or self.n < 1:
            raise ValidationError(f"n must be a positive integer, got {self.n}")
        if int(self.d) != self.d or self.d < 1:
            raise ValidationError(f"d must be a positive integer, got {self.d}")
        if len(self.tau_specs) < 1:
            raise ValidationError("need at least one treatment (tau spec)")
        if len(self.assignment_probs) != self.K + 1:
            raise ValidationError(
                f"assignment_probs needs K + 1 = {self.K + 1} entries, got {len(self.assignment_probs)}"
            )
        if any(p <= 0 for p in self.assignment_probs):
            raise ValidationError("assignment_probs must all be > 0")
        if abs(sum(self.assignment_probs) - 1.0) > 1e-12:
            raise ValidationError(f"assignment_probs must sum to 1, got {sum(self.assignment_probs)!r}")
        if len(self.base_weights) != self.d:
            raise ValidationError(f"base_weights needs d = {self.d} entries, got {len(self.base_weights)}")
        for spec in self.tau_specs:
            feature = getattr(spec, "feature", None)
            if feature is not None and not 0 <= feature < self.d:
                raise ValidationError(f"tau spec {spec} refers to feature {feature} outside 0..{self.d - 1}")
            if isinstance(spec, LinearTau) and len(spec.weights) != self.d:
                raise ValidationError(f"linear tau needs d = {self.d} weights, got {len(spec.weights)}")

    @property
    def K(self) -> int:
        return len(self.tau_specs)


@dataclass(frozen=True, eq=False)
class GroundTruth:
    """True per-treatment effects (n x K, the tau functions evaluated without
    noise) and the control-arm conversion probability per row."""

    customer_ids: np.ndarray
    tau: np.ndarray
    base_prob: np.ndarray

    @property
    def treatment_labels(self) -> tuple[int, ...]:
        return tuple(range(1, self.tau.shape[1] + 1))


def generate(config: GeneratorConfig) -> tuple[CampaignDataset, GroundTruth]:
    """Draw a campaign: iid N(0, 1) features, treatment independent of X,
    outcome ~ Bernoulli(clip(base_prob + tau_t(x), 0.01, 0.99))."""
    n, d, K = config.n, config.d, config.K
    feat_ss, assign_ss, outcome_ss = np.random.SeedSequence(int(config.seed)).spawn(3)
    X = np.random.Generator(np.random.PCG64(feat_ss)).standard_normal((n, d))
    t = np.random.Generator(np.random.PCG64(assign_ss)).choice(
        K + 1, size=n, p=np.asarray(config.assignment_probs)
    )
    base_logit = config.base_intercept + X @ np.asarray(config.base_weights)
    base_prob = np.clip(sigmoid(base_logit), *P_CLIP)
    tau = np.column_stack([spec(X, base_logit) for spec in config.tau_specs])

    p = base_prob.copy()
    treated = t >= 1
    p[treated] = np.clip(base_prob[treated] + tau[treated, t[treated] - 1], *P_CLIP)
    u = np.random.Generator(np.random.PCG64(outcome_ss)).random(n)
    y = (u < p).astype(np.float64)

    width = max(6, len(str(n - 1)))
    ids = [f"{config.id_prefix}{i:0{width}d}" for i in range(n)]
    names = tuple(f"x{j + 1}" for j in range(d))
    return CampaignDataset(ids, X, t, y, names), GroundTruth(np.array(ids, dtype=object), tau, base_prob)


def default_config(seed: int = 0, n: int = 20_000) -> GeneratorConfig:
    """Two treatments with different effect dispersion.

    Treatment 1: ``0.05 + 0.10 * sigmoid(2 x1)`` (wide spread).
    Treatment 2: ``0.08 + 0.02 x2`` clipped to [0, 0.16] (narrow spread,
    higher floor).
    """
    return GeneratorConfig(
        n=n,
        d=5,
        assignment_probs=(0.4, 0.3, 0.3),
        base_weights=(0.25, -0.25, 0.25, 0.0, 0.0),
        base_intercept=-2.5,
        tau_specs=(
            SigmoidTau(offset=0.05, scale=0.10, slope=2.0, feature=0),
            LinearTau(intercept=0.08, weights=(0.0, 0.02, 0.0, 0.0, 0.0), lower=0.0, upper=0.16),
        ),
        seed=seed,
    )


def default_campaign(seed: int = 0) -> tuple[CampaignDataset, GroundTruth]:
    """The canonical 20 000-row, 5-feature, 2-treatment scenario."""
    return generate(default_config(seed))


def uninformative_config(
    treated_rate: float, control_rate: float, n: int = 2000, seed: int = 0, d: int = 3
) -> GeneratorConfig:
    """Single-treatment RCT whose features carry no information.

    Features are still drawn but the outcome ignores them; pair with
    `constant_features` to make them literally identical.
    """
    base_logit = float(np.log(control_rate / (1.0 - control_rate)))
    return GeneratorConfig(
        n=n,
        d=d,
        assignment_probs=(0.5, 0.5),
        base_weights=(0.0,) * d,
        base_intercept=base_logit,
        tau_specs=(ConstantTau(treated_rate - control_rate),),
        seed=seed,
    )


def constant_features(dataset: CampaignDataset, value: float = 1.0) -> CampaignDataset:
    """Copy of ``dataset`` with every feature cell replaced by ``value``."""
    return CampaignDataset(
        dataset.customer_ids,
        np.full(dataset.features.shape, float(value)),
        dataset.treatments,
        dataset.outcomes,
        dataset.feature_names,
    )


def miscalibration_config(seed: int = 0, n: int = 20_000) -> GeneratorConfig:
    """Control conversion ``sigmoid(3 x)``; treatment shifts the logit by +1.

    The true effect is hump-shaped in x, so a heavily shrunk logistic model
    ranks customers poorly until its probabilities are recalibrated.
    """
    return GeneratorConfig(
        n=n,
        d=1,
        assignment_probs=(0.5, 0.5),
        base_weights=(3.0,),
        base_intercept=0.0,
        tau_specs=(LogitShiftTau(1.0),),
        seed=seed,
    )


def generate_confounded(n: int, d: int = 2, feature: int = 0, threshold: float = 0.0, seed: int = 0):
    """Observational variant for propensity checks: treatment is 1 exactly when
    ``x_feature > threshold``; outcomes are Bernoulli(0.5)."""
    feat_ss, outcome_ss = np.random.SeedSequence(int(seed)).spawn(2)
    X = np.random.Generator(np.random.PCG64(feat_ss)).standard_normal((n, d))
    t = (X[:, feature] > threshold).astype(np.int64)
    y = (np.random.Generator(np.random.PCG64(outcome_ss)).random(n) < 0.5).astype(np.float64)
    ids = [f"o{i:06d}" for i in range(n)]
    return CampaignDataset(ids, X, t, y, tuple(f"x{j + 1}" for j in range(d)))


def write_ground_truth_csv(truth: GroundTruth, path) -> None:
    K = truth.tau.shape[1]
    header = ["customer_id", *(f"true_tau_{t}" for t in range(1, K + 1)), "base_prob"]
    rows = (
        [cid, *(fmt(v) for v in tau_row), fmt(b)]
        for cid, tau_row, b in zip(truth.customer_ids, truth.tau, truth.base_prob)
    )
    write_csv_rows(path, header, rows)


def read_ground_truth_csv(path) -> GroundTruth:
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError(f"{path}: empty ground-truth file") from None
        tau_cols = [h for h in header if h.startswith("true_tau_")]
        expected = ["customer_id", *(f"true_tau_{t}" for t in range(1, len(tau_cols) + 1)), "base_prob"]
        if header != expected:
            raise DatasetError(f"{path}: expected header {expected}, found {header}", row=1)
        ids, taus, base = [], [], []
        for line_no, cells in enumerate(reader, start=2):
            if not cells:
                continue
            if len(cells) != len(header):
                raise DatasetError(f"{path}: wrong number of cells", row=line_no)
            try:
                vals = [float(c) for c in cells[1:]]
            except ValueError:
                raise DatasetError(f"{path}: non-numeric value", row=line_no) from None
            ids.append(cells[0])
            taus.append(vals[:-1])
            base.append(vals[-1])
    return GroundTruth(
        np.array(ids, dtype=object),
        np.array(taus, dtype=np.float64).reshape(len(ids), len(tau_cols)),
        np.array(base, dtype=np.float64),
    )


def parse_tau_spec(text: str, d: int) -> TauSpec:
    """Parse a CLI tau spec.

    Forms: ``constant:C``, ``linear:B:W1,...,Wd[:LO:HI]``,
    ``step:J:THRESHOLD:LOW:HIGH``, ``sigmoid:OFFSET:SCALE:SLOPE:J``,
    ``logitshift:DELTA``.  Feature indices J are 1-based.
    """
    parts = text.split(":")
    kind, args = parts[0].strip().lower(), parts[1:]

    def feature(j):
        j = int(j)
        if not 1 <= j <= d:
            raise ValidationError(f"feature index {j} outside 1..{d}")
        return j - 1

    try:
        if kind == "constant" and len(args) == 1:
            return ConstantTau(float(args[0]))
        if kind == "linear" and len(args) in (2, 4):
            weights = tuple(float(w) for w in args[1].split(","))
            if len(weights) != d:
                raise ValidationError(f"linear tau needs {d} weights, got {len(weights)}")
            lo, hi = (float(args[2]), float(args[3])) if len(args) == 4 else (-np.inf, np.inf)
            return LinearTau(float(args[0]), weights, lo, hi)
        if kind == "step" and len(args) == 4:
            return StepTau(feature(args[0]), float(args[1]), float(args[2]), float(args[3]))
        if kind == "sigmoid" and len(args) == 4:
            return SigmoidTau(float(args[0]), float(args[1]), float(args[2]), feature(args[3]))
        if kind == "logitshift" and len(args) == 1:
            return LogitShiftTau(float(args[0]))
    except ValueError as exc:
        raise ValidationError(f"bad tau spec {text!r}: {exc}") from None
    raise ValidationError(f"bad tau spec {text!r}")
