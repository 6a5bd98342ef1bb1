"""
Group-conditional classification statistics for a binary label and a binary
sensitive attribute.

All rates are plug-in estimates from realized predictions. A rate whose
denominator is empty raises instead of silently returning 0.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import DegenerateLabels, EmptyGroup

__all__ = [
    "LabeledDataset",
    "Confusion",
    "GroupConfusion",
    "confusion_by_group",
    "demographic_parity_gap",
    "risk_difference",
    "equalized_odds_gap",
    "false_positive_rate_gap",
    "GROUPS",
]

GROUPS = (0, 1)


def _as_binary(values, name: str) -> np.ndarray:
    arr = np.asarray(values)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    if arr.size and not np.all((arr == 0) | (arr == 1)):
        raise ValueError(f"{name} must contain only 0/1 values")
    return arr.astype(np.int8)


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """Records ``(features, label, group)`` stored column-wise.

    ``features`` has shape ``(n, d)``; ``labels`` and ``groups`` are 0/1
    vectors of length ``n``.
    """

    features: np.ndarray
    labels: np.ndarray
    groups: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.features, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        if X.ndim != 2:
            raise ValueError("features must be a 2-d array (records x dimensions)")
        y = _as_binary(self.labels, "labels")
        a = _as_binary(self.groups, "groups")
        if not (len(X) == len(y) == len(a)):
            raise ValueError(f"length mismatch: features {len(X)}, labels {len(y)}, groups {len(a)}")
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "groups", a)

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def group_size(self, g: int) -> int:
        return int(np.sum(self.groups == g))

    def subset(self, idx) -> "LabeledDataset":
        return LabeledDataset(self.features[idx], self.labels[idx], self.groups[idx])

    @classmethod
    def from_records(cls, records: Iterable[tuple]) -> "LabeledDataset":
        records = list(records)
        if not records:
            raise ValueError("need at least one record")
        X = np.array([np.atleast_1d(r[0]) for r in records], dtype=float)
        return cls(X, [r[1] for r in records], [r[2] for r in records])

    @classmethod
    def from_csv(cls, path: str | os.PathLike) -> "LabeledDataset":
        """Load ``f1,...,fd,label,group`` CSV with a header row."""
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = [h.strip() for h in next(reader)]
            if len(header) < 3 or header[-2:] != ["label", "group"]:
                raise ValueError(f"CSV header must be f1,...,fd,label,group; got {','.join(header)}")
            rows = [row for row in reader if row]
        if not rows:
            raise ValueError(f"{path}: no records")
        table = np.array(rows, dtype=float)
        if table.shape[1] != len(header):
            raise ValueError(f"{path}: ragged rows")
        return cls(table[:, :-2], table[:, -2], table[:, -1])

    def to_csv(self, path: str | os.PathLike) -> None:
        header = [f"f{i + 1}" for i in range(self.dim)] + ["label", "group"]
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for x, y, a in zip(self.features, self.labels, self.groups):
                w.writerow([repr(float(v)) for v in x] + [int(y), int(a)])


@dataclass(frozen=True)
class Confusion:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def accuracy(self) -> float:
        if self.n == 0:
            raise EmptyGroup("accuracy of an empty group")
        return (self.tp + self.tn) / self.n

    @property
    def positive_rate(self) -> float:
        if self.n == 0:
            raise EmptyGroup("positive rate of an empty group")
        return (self.tp + self.fp) / self.n

    @property
    def fpr(self) -> float:
        if self.fp + self.tn == 0:
            raise DegenerateLabels("false positive rate needs at least one negative label")
        return self.fp / (self.fp + self.tn)

    @property
    def tpr(self) -> float:
        if self.tp + self.fn == 0:
            raise DegenerateLabels("true positive rate needs at least one positive label")
        return self.tp / (self.tp + self.fn)


@dataclass(frozen=True)
class GroupConfusion:
    by_group: dict

    def __getitem__(self, g: int) -> Confusion:
        return self.by_group[g]


def _check_predictions(predictions, data: LabeledDataset) -> np.ndarray:
    pred = _as_binary(predictions, "predictions")
    if len(pred) != len(data):
        raise ValueError(f"got {len(pred)} predictions for {len(data)} records")
    return pred


def confusion_by_group(predictions, data: LabeledDataset) -> GroupConfusion:
    pred = _check_predictions(predictions, data)
    out = {}
    for g in GROUPS:
        m = data.groups == g
        if not m.any():
            raise EmptyGroup(f"group {g} has no records")
        p, y = pred[m], data.labels[m]
        out[g] = Confusion(
            tp=int(np.sum((p == 1) & (y == 1))),
            fp=int(np.sum((p == 1) & (y == 0))),
            tn=int(np.sum((p == 0) & (y == 0))),
            fn=int(np.sum((p == 0) & (y == 1))),
        )
    return GroupConfusion(out)


def demographic_parity_gap(predictions, data: LabeledDataset) -> float:
    """|P(yhat=1 | A=0) - P(yhat=1 | A=1)|, a.k.a. risk difference."""
    c = confusion_by_group(predictions, data)
    return abs(c[0].positive_rate - c[1].positive_rate)


risk_difference = demographic_parity_gap


def false_positive_rate_gap(predictions, data: LabeledDataset) -> float:
    c = confusion_by_group(predictions, data)
    return abs(c[0].fpr - c[1].fpr)


def equalized_odds_gap(predictions, data: LabeledDataset) -> float:
    """Largest across-group gap in P(yhat=1 | Y=y, A=a) over y in {0, 1}.

    The y=0 term is the false-positive-rate gap; the y=1 term is the
    true-positive-rate gap.
    """
    c = confusion_by_group(predictions, data)
    return max(abs(c[0].fpr - c[1].fpr), abs(c[0].tpr - c[1].tpr))
