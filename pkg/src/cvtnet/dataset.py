"""Tabular classification data: CSV loading and stratified splitting."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np


class DatasetError(ValueError):
    """Raised for unreadable or malformed input tables."""


@dataclass(frozen=True)
class LabeledTable:
    features: np.ndarray
    feature_names: tuple[str, ...]
    labels: np.ndarray
    class_names: tuple[str, ...]

    def __post_init__(self):
        features = np.array(self.features, dtype=np.float64)
        labels = np.array(self.labels, dtype=np.intp)
        if features.ndim != 2 or features.shape[0] == 0:
            raise DatasetError("features must be a non-empty 2-D matrix")
        if features.shape[1] != len(self.feature_names):
            raise DatasetError("feature_names does not match the feature count")
        if labels.shape != (features.shape[0],):
            raise DatasetError("labels must have one entry per sample")
        if not np.all(np.isfinite(features)):
            raise DatasetError("features contain non-finite values")
        if labels.min() < 0 or labels.max() >= len(self.class_names):
            raise DatasetError("label id outside the class-name range")
        features.flags.writeable = False
        labels.flags.writeable = False
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        object.__setattr__(self, "class_names", tuple(self.class_names))

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    def one_hot(self) -> np.ndarray:
        return np.eye(self.n_classes)[self.labels]

    def take(self, indices) -> "LabeledTable":
        indices = np.asarray(indices, dtype=np.intp)
        return LabeledTable(self.features[indices], self.feature_names,
                            self.labels[indices], self.class_names)


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.8
    seed: int = 7

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise DatasetError(f"train_fraction must lie in (0, 1), got {self.train_fraction}")
        if self.seed < 0:
            raise DatasetError("seed must be non-negative")


def iris_path() -> Path:
    """Location of the bundled Fisher Iris CSV (label column ``species``)."""
    return Path(str(resources.files("cvtnet") / "data" / "iris.csv"))


def load_csv(path, label_column: str) -> LabeledTable:
    """Read a header-first CSV whose non-label columns are all numeric.

    Class ids are assigned in order of first appearance.
    """
    path = Path(path)
    if not path.is_file():
        raise DatasetError(f"{path}: no such file")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DatasetError(f"{path}: empty file, header row expected") from None
        if label_column not in header:
            raise DatasetError(f"{path}: label column {label_column!r} not in header {header}")
        label_idx = header.index(label_column)
        feature_names = [h for i, h in enumerate(header) if i != label_idx]
        rows, labels, class_ids = [], [], {}
        for line_no, record in enumerate(reader, start=2):
            if not record or all(not cell.strip() for cell in record):
                continue
            if len(record) != len(header):
                raise DatasetError(
                    f"{path}: row {line_no} has {len(record)} cells, expected {len(header)}")
            values = []
            for col, cell in enumerate(record):
                if col == label_idx:
                    continue
                try:
                    value = float(cell)
                except ValueError:
                    raise DatasetError(
                        f"{path}: row {line_no}, column {header[col]!r}: "
                        f"cannot parse {cell!r} as a number") from None
                if not math.isfinite(value):
                    raise DatasetError(
                        f"{path}: row {line_no}, column {header[col]!r}: non-finite value")
                values.append(value)
            name = record[label_idx].strip()
            labels.append(class_ids.setdefault(name, len(class_ids)))
            rows.append(values)
    if not rows:
        raise DatasetError(f"{path}: no data rows")
    return LabeledTable(np.array(rows, dtype=np.float64), feature_names,
                        np.array(labels, dtype=np.intp), list(class_ids))


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def split_indices(labels, spec: SplitSpec) -> tuple[np.ndarray, np.ndarray]:
    """Stratified train/test index sets, each sorted ascending."""
    labels = np.asarray(labels)
    n = labels.shape[0]
    n_train = _round_half_up(spec.train_fraction * n)
    if n_train == 0 or n_train == n:
        raise DatasetError(
            f"split of {n} samples at fraction {spec.train_fraction} leaves one side empty")
    classes = np.unique(labels)
    exact = {c: spec.train_fraction * np.count_nonzero(labels == c) for c in classes}
    quota = {c: int(math.floor(v)) for c, v in exact.items()}
    # largest-remainder apportionment so per-class quotas add up to n_train
    short = n_train - sum(quota.values())
    for c in sorted(classes, key=lambda c: (-(exact[c] - quota[c]), c))[:short]:
        quota[c] += 1
    rng = np.random.default_rng(spec.seed)
    train = []
    for c in classes:
        members = np.flatnonzero(labels == c)
        train.extend(rng.permutation(members)[:quota[c]])
    train = np.sort(np.array(train, dtype=np.intp))
    test = np.setdiff1d(np.arange(n, dtype=np.intp), train)
    return train, test


def split(table: LabeledTable, spec: SplitSpec) -> tuple[LabeledTable, LabeledTable]:
    train, test = split_indices(table.labels, spec)
    return table.take(train), table.take(test)


def minmax_scale(train: LabeledTable, *others: LabeledTable) -> list[LabeledTable]:
    """Scale features to [0, 1] using ranges observed on ``train``."""
    lo = train.features.min(axis=0)
    span = train.features.max(axis=0) - lo
    span[span == 0] = 1.0
    return [LabeledTable((t.features - lo) / span, t.feature_names, t.labels, t.class_names)
            for t in (train, *others)]
