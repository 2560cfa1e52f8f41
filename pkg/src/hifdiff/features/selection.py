"""Information-gain ranking of features against the internal/external label."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import rankdata

from .catalog import FeatureVector

N_BINS = 16


@dataclass
class FeatureTable:
    """Row-aligned feature matrix: one row per scenario, columns in ``names`` order."""

    spec_ids: np.ndarray
    names: list[str]
    values: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        self.spec_ids = np.asarray(self.spec_ids, dtype=int)
        self.values = np.asarray(self.values, dtype=float)
        self.labels = np.asarray(self.labels, dtype=object)
        n, d = self.values.shape
        if self.spec_ids.shape != (n,) or self.labels.shape != (n,) or len(self.names) != d:
            raise ValueError("feature table parts are not aligned")

    @classmethod
    def from_vectors(cls, vectors: Sequence[FeatureVector]) -> "FeatureTable":
        if not vectors:
            raise ValueError("empty dataset")
        names = list(vectors[0].values)
        for v in vectors:
            if list(v.values) != names:
                raise ValueError(f"feature schema mismatch for spec {v.spec_id}")
        values = np.array([[v.values[n] for n in names] for v in vectors])
        return cls(np.array([v.spec_id for v in vectors]), names, values, np.array([v.label for v in vectors]))

    def column(self, name: str) -> np.ndarray:
        try:
            return self.values[:, self.names.index(name)]
        except ValueError:
            raise KeyError(f"unknown feature {name!r}") from None

    def subset(self, names: Sequence[str]) -> "FeatureTable":
        idx = [self.names.index(n) for n in names]
        return FeatureTable(self.spec_ids, list(names), self.values[:, idx], self.labels)

    def take(self, rows) -> "FeatureTable":
        return FeatureTable(self.spec_ids[rows], self.names, self.values[rows], self.labels[rows])


def _as_table(dataset) -> FeatureTable:
    return dataset if isinstance(dataset, FeatureTable) else FeatureTable.from_vectors(list(dataset))


def entropy_bits(labels: np.ndarray) -> float:
    _, counts = np.unique(labels, return_counts=True)
    p = counts / counts.sum()
    return float(-(p * np.log2(p)).sum())


def equal_frequency_bins(x: np.ndarray, n_bins: int = N_BINS) -> np.ndarray:
    """Bin index from mid-ranks, so ties share a bin and any increasing map keeps memberships."""
    r = rankdata(x, method="average")
    return np.minimum(((r - 0.5) * n_bins / x.size).astype(int), n_bins - 1)


def _gain(x: np.ndarray, y: np.ndarray, h_y: float) -> float:
    bins = equal_frequency_bins(x)
    h_cond = 0.0
    for b in np.unique(bins):
        mask = bins == b
        h_cond += mask.mean() * entropy_bits(y[mask])
    return float(min(max(h_y - h_cond, 0.0), h_y))


def _check_labels(y: np.ndarray) -> None:
    if y.size == 0 or np.unique(y).size < 2:
        raise ValueError("information gain needs a dataset with both labels present")


def information_gain(dataset, feature_name: str) -> float:
    """H(label) - H(label | feature binned into 16 equal-frequency bins), in bits."""
    table = _as_table(dataset)
    _check_labels(table.labels)
    return _gain(table.column(feature_name), table.labels, entropy_bits(table.labels))


@dataclass(frozen=True)
class FeatureRanking:
    entries: tuple[tuple[str, float], ...]

    @property
    def names(self) -> list[str]:
        return [n for n, _ in self.entries]

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


def rank_features(dataset) -> FeatureRanking:
    """All features, by decreasing gain; equal gains fall back to name order."""
    table = _as_table(dataset)
    _check_labels(table.labels)
    h_y = entropy_bits(table.labels)
    gains = [(name, _gain(table.values[:, j], table.labels, h_y)) for j, name in enumerate(table.names)]
    return FeatureRanking(tuple(sorted(gains, key=lambda e: (-e[1], e[0]))))


def select_top(dataset, k: int = 24) -> FeatureRanking:
    table = _as_table(dataset)
    if not 1 <= k <= len(table.names):
        raise ValueError(f"k must lie in [1, {len(table.names)}], got {k}")
    return FeatureRanking(rank_features(table).entries[:k])
