"""Exhaustive top-K search: the ground-truth generator."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .dataset import GroundTruth, Metric, NeighborList, QuerySet, VectorDataset, order_key, score_rows


def default_workers() -> int:
    env = os.environ.get("VSSC_THREADS")
    if env:
        try:
            w = int(env)
        except ValueError:
            raise ValueError(f"VSSC_THREADS must be an integer, got {env!r}") from None
        if w < 1:
            raise ValueError("VSSC_THREADS must be >= 1")
        return w
    return 1


def select_topk(scores: np.ndarray, rows: np.ndarray, k: int, metric: Metric) -> tuple[np.ndarray, np.ndarray]:
    """Best ``k`` of (rows, scores) with the global ascending-index tie-break."""
    if k < len(scores):
        keyed = -scores if metric.larger_is_better else scores
        kth = np.partition(keyed, k - 1)[k - 1]
        keep = np.nonzero(keyed <= kth)[0]  # includes every row tied with the k-th
        scores, rows = scores[keep], rows[keep]
    perm = order_key(scores, rows, metric)[:k]
    return rows[perm], scores[perm]


def exact_topk(
    dataset: VectorDataset,
    query,
    k: int,
    metric: Metric | str,
    exclude: int | None = None,
) -> NeighborList:
    metric = Metric.parse(metric)
    q = np.asarray(query, dtype=np.float32).reshape(-1)
    if q.shape[0] != dataset.d:
        raise ValueError(f"query dimension {q.shape[0]} != dataset dimension {dataset.d}")
    limit = dataset.n - (1 if exclude is not None else 0)
    if not 1 <= k <= limit:
        raise ValueError(f"K={k} out of range [1, {limit}]")
    if exclude is not None and not 0 <= exclude < dataset.n:
        raise ValueError(f"exclude index {exclude} out of range")
    scores = score_rows(dataset, None, q, metric)
    rows = np.arange(dataset.n, dtype=np.int64)
    if exclude is not None:
        keep = rows != exclude
        scores, rows = scores[keep], rows[keep]
    idx, sc = select_topk(scores, rows, k, metric)
    return NeighborList(idx, sc, k)


def batch_ground_truth(
    dataset: VectorDataset,
    queries: QuerySet | VectorDataset,
    k: int,
    metric: Metric | str,
    self_exclude: bool = False,
    workers: int | None = None,
) -> GroundTruth:
    """Run :func:`exact_topk` for every query.

    With ``self_exclude`` query i is assumed to be dataset row i and that row
    is never returned. Output order is query order regardless of ``workers``.
    """
    metric = Metric.parse(metric)
    qv = queries.vectors if isinstance(queries, QuerySet) else queries
    if qv.d != dataset.d:
        raise ValueError(f"query dimension {qv.d} != dataset dimension {dataset.d}")
    if self_exclude and qv.n > dataset.n:
        raise ValueError("self-exclusion needs query i to be dataset row i")
    workers = workers or default_workers()

    def one(i: int) -> NeighborList:
        return exact_topk(dataset, qv[i], k, metric, exclude=i if self_exclude else None)

    if workers == 1 or qv.n <= 1:
        lists = [one(i) for i in range(qv.n)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            lists = list(pool.map(one, range(qv.n)))
    return GroundTruth(metric=metric, k=k, lists=tuple(lists))
