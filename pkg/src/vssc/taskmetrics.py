"""Synthetic recall, Label Recall@K, Hit@K and Matching Score@K.

``retrieved`` arguments accept NeighborLists or plain index sequences, one
per query. Lists shorter than K are allowed; missing slots count as misses.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .dataset import GroundTruth, LabelMap, NeighborList, PopularityMap


def _ids(r) -> np.ndarray:
    if isinstance(r, NeighborList):
        return r.indices
    return np.asarray(r, dtype=np.int64).reshape(-1)


def _check(retrieved, k: int) -> list[np.ndarray]:
    if k < 1:
        raise ValueError("K must be >= 1")
    out = []
    for qi, r in enumerate(retrieved):
        ids = _ids(r)
        if len(ids) > k:
            raise ValueError(f"query {qi}: {len(ids)} retrieved items for K={k}")
        out.append(ids)
    return out


def _labels_of(ids: np.ndarray, labels: LabelMap, qi: int) -> np.ndarray:
    lab = labels.labels if isinstance(labels, LabelMap) else np.asarray(labels)
    if len(ids) and (ids.min() < 0 or ids.max() >= len(lab)):
        raise KeyError(f"query {qi}: retrieved index without a label")
    return lab[ids]


def synthetic_recall(retrieved: Sequence, truth: GroundTruth | Sequence, k: int) -> float:
    """Mean over queries of |truth ∩ retrieved| / K on dataset indices."""
    got = _check(retrieved, k)
    lists = truth.lists if isinstance(truth, GroundTruth) else truth
    if len(lists) != len(got):
        raise ValueError(f"{len(got)} retrieved lists vs {len(lists)} ground-truth lists")
    if not got:
        raise ValueError("no queries")
    total = 0
    for qi, (g, t) in enumerate(zip(got, lists)):
        tids = _ids(t)[:k]
        if len(tids) != k:
            raise ValueError(f"query {qi}: ground truth has {len(tids)} entries, need K={k}")
        total += len(np.intersect1d(g, tids))
    return total / (len(got) * k)


def label_recall(retrieved: Sequence, labels: LabelMap, query_labels, k: int) -> float:
    got = _check(retrieved, k)
    ql = np.asarray(query_labels, dtype=np.int64)
    if len(ql) != len(got):
        raise ValueError(f"{len(ql)} query labels for {len(got)} queries")
    if not got:
        raise ValueError("no queries")
    hits = 0
    for qi, ids in enumerate(got):
        hits += int((_labels_of(ids, labels, qi) == ql[qi]).sum())
    return hits / (len(got) * k)


def hit_at_k(retrieved: Sequence, labels: LabelMap, query_labels, k: int) -> float:
    got = _check(retrieved, k)
    ql = np.asarray(query_labels, dtype=np.int64)
    if len(ql) != len(got):
        raise ValueError(f"{len(ql)} query labels for {len(got)} queries")
    if not got:
        raise ValueError("no queries")
    hits = 0
    for qi, ids in enumerate(got):
        hits += int(bool((_labels_of(ids, labels, qi) == ql[qi]).any()))
    return hits / len(got)


def matching_score(
    retrieved: Sequence,
    labels: LabelMap,
    hit_sets: Sequence,
    popularity: PopularityMap,
    k: int,
) -> tuple[float, float]:
    """Popularity-weighted hits summed over all queries.

    Every retrieved item counts, so two items sharing a hit label score
    twice. Returns ``(total, total / query_count)``.
    """
    got = _check(retrieved, k)
    if len(hit_sets) != len(got):
        raise ValueError(f"{len(hit_sets)} hit sets for {len(got)} queries")
    if not got:
        raise ValueError("no queries")
    total = 0.0
    for qi, (ids, h) in enumerate(zip(got, hit_sets)):
        for lab in _labels_of(ids, labels, qi).tolist():
            if lab in h:
                if lab not in popularity:
                    raise KeyError(f"query {qi}: no popularity for label {lab}")
                total += popularity[lab]
    return total, total / len(got)
