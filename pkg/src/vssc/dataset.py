"""Core domain types shared by every other module.

Vectors are held as read-only float32 matrices. Scoring always happens in
float64 through :func:`score_rows` so that the oracle and the reference
indexes produce bit-identical scores for the same (query, row) pair.
"""

from __future__ import annotations

import enum
import hashlib
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np


class Metric(str, enum.Enum):
    EUCLIDEAN = "l2"
    INNER_PRODUCT = "ip"
    COSINE = "cos"

    @property
    def larger_is_better(self) -> bool:
        return self is not Metric.EUCLIDEAN

    @classmethod
    def parse(cls, value: "str | Metric") -> "Metric":
        if isinstance(value, Metric):
            return value
        aliases = {
            "l2": cls.EUCLIDEAN,
            "euclidean": cls.EUCLIDEAN,
            "ed": cls.EUCLIDEAN,
            "ip": cls.INNER_PRODUCT,
            "innerproduct": cls.INNER_PRODUCT,
            "inner_product": cls.INNER_PRODUCT,
            "cos": cls.COSINE,
            "cosine": cls.COSINE,
        }
        try:
            return aliases[value.strip().lower()]
        except KeyError:
            raise ValueError(f"unknown metric {value!r}") from None

    @property
    def display(self) -> str:
        return {"l2": "Euclidean", "ip": "InnerProduct", "cos": "Cosine"}[self.value]


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


class VectorDataset:
    """Immutable n x d float32 matrix of embeddings."""

    def __init__(self, values, *, name: str | None = None):
        arr = np.array(values, dtype=np.float32, order="C", copy=True)
        if arr.ndim != 2:
            raise ValueError(f"dataset must be 2-D, got shape {arr.shape}")
        n, d = arr.shape
        if n < 1 or d < 1:
            raise ValueError(f"dataset needs n >= 1 and d >= 1, got {arr.shape}")
        if not np.isfinite(arr).all():
            bad = int(np.argwhere(~np.isfinite(arr))[0, 0])
            raise ValueError(f"non-finite value in row {bad}")
        self._values = _readonly(arr)
        self.name = name

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def n(self) -> int:
        return self._values.shape[0]

    @property
    def d(self) -> int:
        return self._values.shape[1]

    def __len__(self) -> int:
        return self.n

    def __getitem__(self, i):
        return self._values[i]

    def __eq__(self, other) -> bool:
        if not isinstance(other, VectorDataset):
            return NotImplemented
        return np.array_equal(self._values, other._values)

    def __repr__(self) -> str:
        return f"VectorDataset(n={self.n}, d={self.d})"

    @cached_property
    def values64(self) -> np.ndarray:
        return _readonly(self._values.astype(np.float64))

    @cached_property
    def norms(self) -> np.ndarray:
        x = self.values64
        return _readonly(np.sqrt((x * x).sum(axis=1)))

    @cached_property
    def sha256(self) -> str:
        h = hashlib.sha256()
        h.update(np.array([self.n, self.d], dtype="<i8").tobytes())
        h.update(self._values.astype("<f4").tobytes())
        return h.hexdigest()

    def scaled(self, alpha: float) -> "VectorDataset":
        return VectorDataset(self._values.astype(np.float64) * alpha)


def score_rows(dataset: VectorDataset, rows, query: np.ndarray, metric: Metric) -> np.ndarray:
    """Score ``dataset[rows]`` against ``query``.

    Euclidean scores are squared distances (smaller is better); inner product
    and cosine scores are similarities (larger is better). Every component
    routes through here, so a given (row, query) pair always gets the same
    float64 value no matter which subset it was scored in.
    """
    x = dataset.values64 if rows is None else dataset.values64[rows]
    q = np.asarray(query, dtype=np.float64)
    if metric is Metric.EUCLIDEAN:
        diff = x - q
        return (diff * diff).sum(axis=1)
    dots = (x * q).sum(axis=1)
    if metric is Metric.INNER_PRODUCT:
        return dots
    xn = dataset.norms if rows is None else dataset.norms[rows]
    qn = float(np.sqrt((q * q).sum()))
    denom = xn * qn
    out = np.zeros_like(dots)
    np.divide(dots, denom, out=out, where=denom > 0)
    return out


def order_key(scores: np.ndarray, indices: np.ndarray, metric: Metric) -> np.ndarray:
    """Permutation sorting (scores, indices) best-first with ascending-index tie-break."""
    primary = -scores if metric.larger_is_better else scores
    return np.lexsort((indices, primary))


@dataclass(frozen=True)
class NeighborList:
    """Ranked search result for one query.

    ``k`` is the requested length; ``short`` flags lists that came back with
    fewer rows (IVF with too few candidates, or unreachable graph nodes).
    """

    indices: np.ndarray
    scores: np.ndarray
    k: int

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        sc = np.asarray(self.scores, dtype=np.float64)
        if idx.shape != sc.shape or idx.ndim != 1:
            raise ValueError("indices and scores must be equal-length 1-D arrays")
        if len(idx) > self.k:
            raise ValueError(f"list longer than k={self.k}")
        object.__setattr__(self, "indices", _readonly(idx))
        object.__setattr__(self, "scores", _readonly(sc))

    @property
    def short(self) -> bool:
        return len(self.indices) < self.k

    def __len__(self) -> int:
        return len(self.indices)

    def __eq__(self, other) -> bool:
        if not isinstance(other, NeighborList):
            return NotImplemented
        return (
            self.k == other.k
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.scores, other.scores)
        )

    def is_ordered(self, metric: Metric) -> bool:
        if len(self.indices) != len(np.unique(self.indices)):
            return False
        perm = order_key(self.scores, self.indices, metric)
        return bool(np.array_equal(perm, np.arange(len(perm))))


@dataclass(frozen=True)
class GroundTruth:
    metric: Metric
    k: int
    lists: tuple[NeighborList, ...]

    def __len__(self) -> int:
        return len(self.lists)

    def __getitem__(self, i) -> NeighborList:
        return self.lists[i]

    @property
    def indices(self) -> np.ndarray:
        return np.stack([nl.indices for nl in self.lists]) if self.lists else np.zeros((0, self.k), np.int64)

    @property
    def scores(self) -> np.ndarray:
        return np.stack([nl.scores for nl in self.lists]) if self.lists else np.zeros((0, self.k))


class LabelMap:
    """Non-negative integer task label per dataset row."""

    def __init__(self, labels: Sequence[int] | np.ndarray):
        arr = np.array(labels, dtype=np.int64, copy=True).reshape(-1)
        if (arr < 0).any():
            raise ValueError("labels must be non-negative")
        self._labels = _readonly(arr)

    @property
    def labels(self) -> np.ndarray:
        return self._labels

    def __len__(self) -> int:
        return len(self._labels)

    def __getitem__(self, i):
        return self._labels[i]

    def __eq__(self, other) -> bool:
        if not isinstance(other, LabelMap):
            return NotImplemented
        return np.array_equal(self._labels, other._labels)

    def attach(self, dataset: VectorDataset) -> "LabelMap":
        if len(self) != dataset.n:
            raise ValueError(f"label count {len(self)} does not match dataset n={dataset.n}")
        return self


@dataclass(frozen=True)
class PopularityMap:
    scores: Mapping[int, float] = field(default_factory=dict)

    def __post_init__(self):
        for label, p in self.scores.items():
            if p < 0 or not np.isfinite(p):
                raise ValueError(f"popularity for label {label} must be finite and non-negative")

    def __getitem__(self, label: int) -> float:
        return self.scores[label]

    def __contains__(self, label) -> bool:
        return label in self.scores


@dataclass(frozen=True)
class QuerySet:
    vectors: VectorDataset
    query_labels: np.ndarray | None = None
    hit_sets: tuple[frozenset, ...] | None = None

    def __post_init__(self):
        if not isinstance(self.vectors, VectorDataset):
            object.__setattr__(self, "vectors", VectorDataset(self.vectors))
        m = self.vectors.n
        if self.query_labels is not None:
            ql = _readonly(np.array(self.query_labels, dtype=np.int64).reshape(-1))
            if len(ql) != m:
                raise ValueError(f"{len(ql)} query labels for {m} queries")
            object.__setattr__(self, "query_labels", ql)
        if self.hit_sets is not None:
            hs = tuple(frozenset(int(x) for x in h) for h in self.hit_sets)
            if len(hs) != m:
                raise ValueError(f"{len(hs)} hit sets for {m} queries")
            object.__setattr__(self, "hit_sets", hs)

    @property
    def m(self) -> int:
        return self.vectors.n

    def __len__(self) -> int:
        return self.m

    def check_dim(self, dataset: VectorDataset) -> None:
        if self.vectors.d != dataset.d:
            raise ValueError(f"query dimension {self.vectors.d} != dataset dimension {dataset.d}")
