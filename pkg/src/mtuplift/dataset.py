"""Campaign data: representation, CSV ingestion, stratified splitting and
per-treatment filtering."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from ._fileutil import fmt, write_csv_rows
from .errors import DatasetError, ValidationError

CONTROL = 0


@dataclass(frozen=True, eq=False)
class CampaignDataset:
    """Features, treatment labels (0 = control) and outcomes for n customers.

    Arrays are copied on construction and made read-only.  Presence of the
    control arm is not enforced here; `load_csv` and the fitting routines
    check it where it is required.
    """

    customer_ids: np.ndarray
    features: np.ndarray
    treatments: np.ndarray
    outcomes: np.ndarray
    feature_names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        ids = np.array([str(c) for c in self.customer_ids], dtype=object)
        X = np.array(self.features, dtype=np.float64)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        if X.ndim != 2:
            raise DatasetError("features must be a 2-d matrix")
        t_raw = np.asarray(self.treatments)
        t = t_raw.astype(np.int64)
        if t_raw.size and not np.array_equal(t, t_raw):
            raise DatasetError("treatment labels must be integers")
        y = np.array(self.outcomes, dtype=np.float64)
        n = len(ids)
        if n < 1:
            raise DatasetError("dataset must contain at least one row")
        if not (X.shape[0] == len(t) == len(y) == n):
            raise DatasetError(
                f"length mismatch: ids={n}, features={X.shape[0]}, "
                f"treatments={len(t)}, outcomes={len(y)}"
            )
        if not np.all(np.isfinite(X)):
            i, j = np.argwhere(~np.isfinite(X))[0]
            raise DatasetError(f"non-finite feature value at index {i}, feature {j}")
        if not np.all(np.isfinite(y)):
            raise DatasetError(f"non-finite outcome at index {int(np.argmax(~np.isfinite(y)))}")
        if np.any(t < 0):
            raise DatasetError("treatment labels must be non-negative")
        if len(set(ids)) != n:
            raise DatasetError("customer_ids must be unique")
        names = tuple(self.feature_names) or tuple(f"x{j}" for j in range(X.shape[1]))
        if len(names) != X.shape[1]:
            raise DatasetError(f"{len(names)} feature names for {X.shape[1]} feature columns")
        if len(set(names)) != len(names):
            raise DatasetError("feature names must be unique")
        for arr in (ids, X, t, y):
            arr.flags.writeable = False
        object.__setattr__(self, "customer_ids", ids)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "treatments", t)
        object.__setattr__(self, "outcomes", y)
        object.__setattr__(self, "feature_names", names)

    @property
    def n(self) -> int:
        return len(self.customer_ids)

    @property
    def d(self) -> int:
        return self.features.shape[1]

    @property
    def treatment_labels(self) -> tuple[int, ...]:
        """Non-control labels present, ascending."""
        return tuple(int(t) for t in np.unique(self.treatments) if t != CONTROL)

    @property
    def K(self) -> int:
        return len(self.treatment_labels)

    @property
    def has_control(self) -> bool:
        return bool(np.any(self.treatments == CONTROL))

    @property
    def binary_outcome(self) -> bool:
        return bool(np.all((self.outcomes == 0.0) | (self.outcomes == 1.0)))

    def take(self, index) -> "CampaignDataset":
        """Rows selected by an integer index array or boolean mask."""
        index = np.asarray(index)
        return CampaignDataset(
            self.customer_ids[index],
            self.features[index],
            self.treatments[index],
            self.outcomes[index],
            self.feature_names,
        )

    def with_treatments(self, treatments) -> "CampaignDataset":
        return CampaignDataset(
            self.customer_ids, self.features, treatments, self.outcomes, self.feature_names
        )


@dataclass(frozen=True, eq=False)
class DatasetSplit:
    train: CampaignDataset
    validation: CampaignDataset


def _parse_real(cell, row, column):
    try:
        value = float(cell)
    except ValueError:
        raise DatasetError(f"non-numeric value {cell!r}", row=row, column=column) from None
    if not math.isfinite(value):
        raise DatasetError(f"non-finite value {cell!r}", row=row, column=column)
    return value


def load_csv(
    path,
    outcome_column: str = "outcome",
    treatment_column: str = "treatment",
    id_column: str = "customer_id",
    require_control: bool = True,
) -> CampaignDataset:
    """Read a campaign CSV.

    Every column other than the id, treatment and outcome columns is a real
    valued feature.  Errors carry the file line number and column name.
    Raises FileNotFoundError for a missing file and DatasetError otherwise.
    """
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError(f"{path}: empty file, header row required") from None
        header = [h.strip() for h in header]
        for name in (id_column, treatment_column, outcome_column):
            if name not in header:
                raise DatasetError(f"{path}: missing column {name!r}", row=1, column=name)
        if len(set(header)) != len(header):
            dup = sorted({h for h in header if header.count(h) > 1})
            raise DatasetError(f"{path}: duplicate column names {dup}", row=1)
        id_j = header.index(id_column)
        t_j = header.index(treatment_column)
        y_j = header.index(outcome_column)
        feat_j = [j for j in range(len(header)) if j not in (id_j, t_j, y_j)]

        ids, feats, treatments, outcomes = [], [], [], []
        seen = {}
        for line_no, cells in enumerate(reader, start=2):
            if not cells:
                continue
            if len(cells) != len(header):
                raise DatasetError(
                    f"{path}: expected {len(header)} cells, found {len(cells)}", row=line_no
                )
            cid = cells[id_j].strip()
            if cid in seen:
                raise DatasetError(
                    f"{path}: duplicate customer_id {cid!r} (first seen on row {seen[cid]})",
                    row=line_no,
                    column=id_column,
                )
            seen[cid] = line_no
            t_cell = cells[t_j].strip()
            try:
                t = int(t_cell)
            except ValueError:
                raise DatasetError(
                    f"{path}: treatment {t_cell!r} is not an integer",
                    row=line_no,
                    column=treatment_column,
                ) from None
            if t < 0:
                raise DatasetError(
                    f"{path}: negative treatment label {t}", row=line_no, column=treatment_column
                )
            ids.append(cid)
            treatments.append(t)
            outcomes.append(_parse_real(cells[y_j].strip(), line_no, outcome_column))
            feats.append([_parse_real(cells[j].strip(), line_no, header[j]) for j in feat_j])

    if not ids:
        raise DatasetError(f"{path}: no data rows")
    if require_control and CONTROL not in treatments:
        raise DatasetError(f"{path}: no control rows (treatment == 0)", column=treatment_column)
    X = np.array(feats, dtype=np.float64).reshape(len(ids), len(feat_j))
    return CampaignDataset(ids, X, treatments, outcomes, tuple(header[j] for j in feat_j))


def write_csv(
    dataset: CampaignDataset,
    path,
    outcome_column: str = "outcome",
    treatment_column: str = "treatment",
    id_column: str = "customer_id",
) -> None:
    """Write ``customer_id,<features...>,treatment,outcome`` with 17 significant digits."""
    header = [id_column, *dataset.feature_names, treatment_column, outcome_column]
    rows = (
        [cid, *(fmt(v) for v in x), str(int(t)), fmt(y)]
        for cid, x, t, y in zip(
            dataset.customer_ids, dataset.features, dataset.treatments, dataset.outcomes
        )
    )
    write_csv_rows(path, header, rows)


def split(dataset: CampaignDataset, validation_fraction: float, seed: int) -> DatasetSplit:
    """Stratified train/validation split.

    Each treatment group is shuffled with its own PCG64 stream seeded from
    ``(seed, label)``; ``round(fraction * group_size)`` rows (at least one,
    at most size - 1) go to validation.  Both parts keep input row order.
    """
    if not 0.0 < validation_fraction < 1.0:
        raise ValidationError(f"validation_fraction must be in (0, 1), got {validation_fraction}")
    in_validation = np.zeros(dataset.n, dtype=bool)
    for label in np.unique(dataset.treatments):
        members = np.flatnonzero(dataset.treatments == label)
        if len(members) < 2:
            raise ValidationError(
                f"treatment group {int(label)} has {len(members)} row(s); at least 2 are needed to stratify"
            )
        rng = np.random.Generator(np.random.PCG64([int(seed), int(label)]))
        shuffled = rng.permutation(members)
        n_val = int(math.floor(validation_fraction * len(members) + 0.5))
        n_val = min(max(n_val, 1), len(members) - 1)
        in_validation[shuffled[:n_val]] = True
    return DatasetSplit(
        train=dataset.take(np.flatnonzero(~in_validation)),
        validation=dataset.take(np.flatnonzero(in_validation)),
    )


def filter_one_vs_control(dataset: CampaignDataset, t: int) -> CampaignDataset:
    """Rows with treatment in {0, t}, relabelled so that t -> 1."""
    t = int(t)
    if t == CONTROL:
        raise ValidationError("t must be a non-control treatment label")
    is_t = dataset.treatments == t
    if not np.any(is_t):
        raise ValidationError(f"treatment {t} is absent from the dataset")
    keep = is_t | (dataset.treatments == CONTROL)
    subset = dataset.take(np.flatnonzero(keep))
    return subset.with_treatments(is_t[keep].astype(np.int64))


def arm_counts(dataset: CampaignDataset) -> dict[int, int]:
    labels, counts = np.unique(dataset.treatments, return_counts=True)
    return {int(lab): int(c) for lab, c in zip(labels, counts)}


def validate_feature_names(expected: Sequence[str], found: Sequence[str]) -> None:
    """Raise ValidationError listing missing and extra feature columns."""
    expected, found = list(expected), list(found)
    if expected == found:
        return
    missing = [c for c in expected if c not in found]
    extra = [c for c in found if c not in expected]
    if missing or extra:
        raise ValidationError(f"feature mismatch: missing columns {missing}, extra columns {extra}")
    raise ValidationError(f"feature columns out of order: expected {expected}, found {found}")
