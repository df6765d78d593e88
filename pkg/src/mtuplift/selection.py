"""Offer selection: direct rank comparison or z-score comparison of per-treatment
uplift scores, plus the top-fraction cutoff."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._fileutil import fmt, write_csv_rows
from .errors import DatasetError, ValidationError

NONE = -1
STD_FLOOR = 1e-12
STRATEGIES = ("rank", "zscore")


@dataclass(frozen=True, eq=False)
class UpliftScores:
    """n x K CATE estimates; column j belongs to ``treatment_labels[j]``."""

    customer_ids: np.ndarray
    treatment_labels: tuple[int, ...]
    scores: np.ndarray

    def __post_init__(self):
        ids = np.array([str(c) for c in self.customer_ids], dtype=object)
        labels = tuple(int(t) for t in self.treatment_labels)
        S = np.array(self.scores, dtype=np.float64)
        if S.ndim == 1:
            S = S.reshape(-1, 1)
        if len(labels) < 1:
            raise ValidationError("need at least one treatment column")
        if list(labels) != sorted(set(labels)) or labels[0] < 1:
            raise ValidationError(f"treatment labels must be unique, ascending and >= 1: {labels}")
        if S.shape != (len(ids), len(labels)):
            raise ValidationError(
                f"scores shape {S.shape} does not match {len(ids)} customers x {len(labels)} treatments"
            )
        if not np.all(np.isfinite(S)):
            raise ValidationError("uplift scores must be finite")
        ids.flags.writeable = False
        S.flags.writeable = False
        object.__setattr__(self, "customer_ids", ids)
        object.__setattr__(self, "treatment_labels", labels)
        object.__setattr__(self, "scores", S)

    @property
    def n(self) -> int:
        return len(self.customer_ids)

    def replace_scores(self, scores) -> "UpliftScores":
        return UpliftScores(self.customer_ids, self.treatment_labels, scores)


@dataclass(frozen=True, eq=False)
class Assignment:
    """Per customer: assigned label (``NONE`` = -1 for no treatment), the raw
    CATE of that treatment, and the rank or z-score that decided it."""

    customer_ids: np.ndarray
    assigned: np.ndarray
    deciding_score: np.ndarray
    deciding_stat: np.ndarray

    def __post_init__(self):
        n = len(self.customer_ids)
        for name in ("assigned", "deciding_score", "deciding_stat"):
            if len(getattr(self, name)) != n:
                raise ValidationError(f"{name} has the wrong length")
        ids = np.array([str(c) for c in self.customer_ids], dtype=object)
        object.__setattr__(self, "customer_ids", ids)
        object.__setattr__(self, "assigned", np.asarray(self.assigned, dtype=np.int64))
        object.__setattr__(self, "deciding_score", np.asarray(self.deciding_score, dtype=np.float64))
        object.__setattr__(self, "deciding_stat", np.asarray(self.deciding_stat, dtype=np.float64))

    @property
    def n(self) -> int:
        return len(self.customer_ids)


def descending_ranks(column) -> np.ndarray:
    """1-based ranks, highest score first; ties go to the earlier row."""
    column = np.asarray(column, dtype=np.float64)
    order = np.argsort(-column, kind="stable")
    ranks = np.empty(len(column), dtype=np.int64)
    ranks[order] = np.arange(1, len(column) + 1)
    return ranks


def _from_winners(scores: UpliftScores, winner_col, stats) -> Assignment:
    rows = np.arange(scores.n)
    labels = np.asarray(scores.treatment_labels, dtype=np.int64)
    return Assignment(
        scores.customer_ids,
        labels[winner_col],
        scores.scores[rows, winner_col],
        stats[rows, winner_col],
    )


def direct_rank_assign(scores: UpliftScores) -> Assignment:
    """Assign each customer the treatment where their within-treatment rank is best.

    Rank ties across treatments go to the smallest treatment label.
    """
    ranks = np.column_stack([descending_ranks(col) for col in scores.scores.T])
    # argmin returns the first minimum, i.e. the smallest label
    return _from_winners(scores, np.argmin(ranks, axis=1), ranks.astype(np.float64))


def zscore_standardize(scores: UpliftScores) -> UpliftScores:
    """Per-column ``(s - mean) / std`` with the population std.

    Columns whose std is below 1e-12 map to zeros.
    """
    if scores.n < 2:
        raise ValidationError("z-score standardization needs at least 2 customers")
    S = scores.scores
    mean = S.mean(axis=0)
    std = S.std(axis=0)
    flat = std < STD_FLOOR
    Z = (S - mean) / np.where(flat, 1.0, std)
    Z[:, flat] = 0.0
    return scores.replace_scores(Z)


def zscore_assign(scores: UpliftScores) -> Assignment:
    """Assign the treatment with the highest z-score; ties go to the smallest label."""
    Z = zscore_standardize(scores).scores
    return _from_winners(scores, np.argmax(Z, axis=1), Z)


def assign(scores: UpliftScores, strategy: str) -> Assignment:
    if strategy == "rank":
        return direct_rank_assign(scores)
    if strategy == "zscore":
        return zscore_assign(scores)
    raise ValidationError(f"strategy must be one of {STRATEGIES}, got {strategy!r}")


def cutoff_count(n: int, top_fraction: float) -> int:
    """``ceil(top_fraction * n)``, immune to products like 0.7 * 10 = 7.000000000000001."""
    return int(math.ceil(round(top_fraction * n, 9)))


def apply_cutoff(assignment: Assignment, scores: UpliftScores, top_fraction: float) -> Assignment:
    """Keep the top ``ceil(top_fraction * n)`` customers by deciding (raw) score.

    Everyone else becomes ``NONE``.  Boundary ties keep the earlier row.
    """
    if not 0.0 < top_fraction <= 1.0:
        raise ValidationError(f"top_fraction must be in (0, 1], got {top_fraction}")
    if assignment.n != scores.n or not np.array_equal(assignment.customer_ids, scores.customer_ids):
        raise ValidationError("assignment and scores are not aligned by customer_id")
    active = np.flatnonzero(assignment.assigned != NONE)
    keep_n = min(cutoff_count(assignment.n, top_fraction), len(active))
    order = active[np.argsort(-assignment.deciding_score[active], kind="stable")]
    assigned = np.full(assignment.n, NONE, dtype=np.int64)
    kept = order[:keep_n]
    assigned[kept] = assignment.assigned[kept]
    return Assignment(
        assignment.customer_ids, assigned, assignment.deciding_score, assignment.deciding_stat
    )


def select(scores: UpliftScores, strategy: str, top_fraction: float = 1.0) -> Assignment:
    return apply_cutoff(assign(scores, strategy), scores, top_fraction)


def write_assignment_csv(assignment: Assignment, path) -> None:
    rows = (
        [cid, str(int(a)), fmt(s), fmt(z)]
        for cid, a, s, z in zip(
            assignment.customer_ids,
            assignment.assigned,
            assignment.deciding_score,
            assignment.deciding_stat,
        )
    )
    write_csv_rows(
        path, ["customer_id", "assigned_treatment", "deciding_score", "deciding_stat"], rows
    )


def read_assignment_csv(path) -> Assignment:
    ids, assigned, score, stat = [], [], [], []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for line_no, row in enumerate(reader, start=2):
            try:
                ids.append(row["customer_id"])
                assigned.append(int(row["assigned_treatment"]))
                score.append(float(row["deciding_score"]))
                stat.append(float(row["deciding_stat"]))
            except (KeyError, TypeError, ValueError) as exc:
                raise DatasetError(f"{path}: malformed assignment row: {exc}", row=line_no) from None
    return Assignment(ids, assigned, score, stat)


def score_column(label: int) -> str:
    return f"cate_{label}"


def write_scores_csv(scores: UpliftScores, path) -> None:
    header = ["customer_id", *(score_column(t) for t in scores.treatment_labels)]
    rows = ([cid, *(fmt(v) for v in row)] for cid, row in zip(scores.customer_ids, scores.scores))
    write_csv_rows(path, header, rows)


def read_scores_csv(path) -> UpliftScores:
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError(f"{path}: empty scores file") from None
        if not header or header[0] != "customer_id":
            raise DatasetError(f"{path}: first column must be customer_id", row=1)
        labels = []
        for name in header[1:]:
            if not name.startswith("cate_"):
                raise DatasetError(f"{path}: unexpected column", row=1, column=name)
            try:
                labels.append(int(name[len("cate_"):]))
            except ValueError:
                raise DatasetError(f"{path}: bad treatment label", row=1, column=name) from None
        ids, rows = [], []
        for line_no, cells in enumerate(reader, start=2):
            if not cells:
                continue
            if len(cells) != len(header):
                raise DatasetError(f"{path}: wrong number of cells", row=line_no)
            ids.append(cells[0])
            try:
                rows.append([float(c) for c in cells[1:]])
            except ValueError:
                raise DatasetError(f"{path}: non-numeric score", row=line_no) from None
    return UpliftScores(ids, labels, np.array(rows, dtype=np.float64).reshape(len(ids), len(labels)))
