"""Desk-scale reference indexes: exhaustive, IVF-flat and a small-world graph.

All three score rows through :func:`vssc.dataset.score_rows` and order
results with the global ascending-index tie-break, so at maximal search
parameters they reproduce the oracle exactly.
"""

from __future__ import annotations

import heapq
import json
import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .clustering import Clustering, Variant, kmeans
from .dataset import Metric, NeighborList, VectorDataset, order_key, score_rows
from .oracle import exact_topk, select_topk

MAGIC = b"VSSCIDX1"
FORMAT_VERSION = 1


def default_nlist(n: int) -> int:
    """4 * sqrt(n), clamped to [2, n]."""
    return int(min(max(round(4 * math.sqrt(n)), 2), n))


class FlatIndex:
    kind = "flat"

    def __init__(self, dataset: VectorDataset, metric: Metric | str):
        self.dataset = dataset
        self.metric = Metric.parse(metric)

    def search(self, query, k: int, param=None) -> NeighborList:
        return exact_topk(self.dataset, query, k, self.metric)

    def build_params(self) -> dict:
        return {}


@dataclass
class IvfIndex:
    dataset: VectorDataset
    metric: Metric
    clustering: Clustering
    postings: tuple[np.ndarray, ...]
    seed: int

    kind = "ivf"

    @property
    def nlist(self) -> int:
        return self.clustering.k

    @property
    def centroids(self) -> np.ndarray:
        return self.clustering.centroids

    def search(self, query, k: int, nprobe: int) -> NeighborList:
        return search_ivf(self, query, k, nprobe)

    def build_params(self) -> dict:
        return {"nlist": self.nlist, "seed": self.seed}


def build_ivf(
    dataset: VectorDataset,
    metric: Metric | str,
    nlist: int | None = None,
    seed: int = 0,
    max_iters: int = 50,
) -> IvfIndex:
    """Cluster with Euclidean k-means whatever the search metric.

    Under inner product the cells are still Euclidean Voronoi cells and are
    ranked by centroid inner product at query time; that mismatch is the
    norm-bias behaviour the harness is meant to expose.
    """
    metric = Metric.parse(metric)
    nlist = default_nlist(dataset.n) if nlist is None else nlist
    if not 2 <= nlist <= dataset.n:
        raise ValueError(f"nlist={nlist} must be in [2, n={dataset.n}]")
    cl = kmeans(dataset, nlist, Variant.EUCLIDEAN, max_iters=max_iters, seed=seed)
    order = np.argsort(cl.assignment, kind="stable")
    bounds = np.searchsorted(cl.assignment[order], np.arange(nlist + 1))
    postings = tuple(order[bounds[j] : bounds[j + 1]] for j in range(nlist))
    return IvfIndex(dataset=dataset, metric=metric, clustering=cl, postings=postings, seed=seed)


def _rank_cells(index: IvfIndex, q: np.ndarray) -> np.ndarray:
    c = index.centroids
    cells = np.arange(index.nlist)
    if index.metric is Metric.EUCLIDEAN:
        diff = c - q
        s = (diff * diff).sum(axis=1)
    elif index.metric is Metric.INNER_PRODUCT:
        s = (c * q).sum(axis=1)
    else:
        cn = np.sqrt((c * c).sum(axis=1)) * math.sqrt(float((q * q).sum()))
        s = np.divide((c * q).sum(axis=1), cn, out=np.zeros(len(c)), where=cn > 0)
    return cells[order_key(s, cells, index.metric)]


def search_ivf(index: IvfIndex, query, k: int, nprobe: int) -> NeighborList:
    if not 1 <= nprobe <= index.nlist:
        raise ValueError(f"nprobe={nprobe} must be in [1, nlist={index.nlist}]")
    if k < 1:
        raise ValueError("K must be >= 1")
    q = np.asarray(query, dtype=np.float32).astype(np.float64).reshape(-1)
    if q.shape[0] != index.dataset.d:
        raise ValueError(f"query dimension {q.shape[0]} != dataset dimension {index.dataset.d}")
    probe = _rank_cells(index, q)[:nprobe]
    rows = np.sort(np.concatenate([index.postings[j] for j in probe]))
    scores = score_rows(index.dataset, rows, q, index.metric)
    idx, sc = select_topk(scores, rows, min(k, len(rows)), index.metric)
    return NeighborList(idx, sc, k)


class NswIndex:
    """Single-layer navigable small-world graph; node 0 is the entry point."""

    kind = "nsw"

    def __init__(self, dataset: VectorDataset, metric: Metric, m: int, efc: int, seed: int, adjacency):
        self.dataset = dataset
        self.metric = metric
        self.m = m
        self.efc = efc
        self.seed = seed
        self.adjacency = tuple(np.asarray(a, dtype=np.int64) for a in adjacency)
        self.entry = 0

    def search(self, query, k: int, ef: int) -> NeighborList:
        return search_nsw(self, query, k, ef)

    def build_params(self) -> dict:
        return {"M": self.m, "efc": self.efc, "seed": self.seed}

    def degrees(self) -> np.ndarray:
        return np.array([len(a) for a in self.adjacency])

    def reachable(self) -> np.ndarray:
        seen = np.zeros(self.dataset.n, dtype=bool)
        seen[self.entry] = True
        stack = [self.entry]
        while stack:
            u = stack.pop()
            for v in self.adjacency[u]:
                if not seen[v]:
                    seen[v] = True
                    stack.append(int(v))
        return seen

    def is_connected(self) -> bool:
        return bool(self.reachable().all())

    def __eq__(self, other) -> bool:
        if not isinstance(other, NswIndex):
            return NotImplemented
        return (
            self.metric is other.metric
            and (self.m, self.efc) == (other.m, other.efc)
            and len(self.adjacency) == len(other.adjacency)
            and all(np.array_equal(a, b) for a, b in zip(self.adjacency, other.adjacency))
        )


def _beam_search(dataset, adjacency, metric, q, ef, entry) -> list[tuple[float, int]]:
    """Best-first search; returns (key, node) pairs, best first. Smaller key is better."""
    sign = -1.0 if metric.larger_is_better else 1.0
    visited = {entry}
    k0 = sign * float(score_rows(dataset, [entry], q, metric)[0])
    frontier = [(k0, entry)]
    pool = [(-k0, -entry)]  # max-heap on (key, node): worst result on top
    while frontier:
        ck, c = heapq.heappop(frontier)
        wk, wn = -pool[0][0], -pool[0][1]
        if len(pool) >= ef and (ck, c) > (wk, wn):
            break
        fresh = [int(u) for u in adjacency[c] if u not in visited]
        if not fresh:
            continue
        visited.update(fresh)
        keys = sign * score_rows(dataset, fresh, q, metric)
        for u, key in zip(fresh, keys.tolist()):
            if len(pool) < ef or (key, u) < (-pool[0][0], -pool[0][1]):
                heapq.heappush(frontier, (key, u))
                heapq.heappush(pool, (-key, -u))
                if len(pool) > ef:
                    heapq.heappop(pool)
    return sorted((-a, -b) for a, b in pool)


def _prune(dataset, metric, node: int, nbrs: list[int], m: int) -> list[int]:
    arr = np.asarray(nbrs, dtype=np.int64)
    s = score_rows(dataset, arr, dataset.values64[node], metric)
    return arr[order_key(s, arr, metric)[:m]].tolist()


def build_nsw(
    dataset: VectorDataset,
    metric: Metric | str,
    m: int = 32,
    efc: int = 256,
    seed: int = 0,
) -> NswIndex:
    """Insert rows in dataset order, linking each to its best <= M candidates.

    ``seed`` is recorded but does not influence the graph: insertion order
    and the entry point are both fixed.
    """
    metric = Metric.parse(metric)
    if m < 2:
        raise ValueError("M must be >= 2")
    if efc < m:
        raise ValueError("efc must be >= M")
    adj: list[list[int]] = [[] for _ in range(dataset.n)]
    x = dataset.values64
    for i in range(1, dataset.n):
        found = _beam_search(dataset, adj, metric, x[i], efc, 0)
        chosen = [node for _, node in found[:m]]
        adj[i] = chosen
        for c in chosen:
            adj[c].append(i)
            if len(adj[c]) > m:
                adj[c] = _prune(dataset, metric, c, adj[c], m)
    return NswIndex(dataset, metric, m, efc, seed, adj)


def search_nsw(index: NswIndex, query, k: int, ef: int) -> NeighborList:
    if k < 1:
        raise ValueError("K must be >= 1")
    if ef < k:
        raise ValueError(f"ef={ef} must be >= K={k}")
    q = np.asarray(query, dtype=np.float32).astype(np.float64).reshape(-1)
    if q.shape[0] != index.dataset.d:
        raise ValueError(f"query dimension {q.shape[0]} != dataset dimension {index.dataset.d}")
    found = _beam_search(index.dataset, index.adjacency, index.metric, q, ef, index.entry)
    rows = np.array([node for _, node in found], dtype=np.int64)
    scores = score_rows(index.dataset, rows, q, index.metric)
    idx, sc = select_topk(scores, rows, min(k, len(rows)), index.metric)
    return NeighborList(idx, sc, k)


# -- serialization -----------------------------------------------------------
# layout: MAGIC | kind (4 bytes) | u32 header length | JSON header | arrays (LE)


def save_index(path, index) -> None:
    header = {
        "version": FORMAT_VERSION,
        "metric": index.metric.value,
        "n": index.dataset.n,
        "d": index.dataset.d,
        "dataset_sha256": index.dataset.sha256,
    }
    if isinstance(index, IvfIndex):
        kind = b"IVF\0"
        header.update(nlist=index.nlist, seed=index.seed, variant=index.clustering.variant.value)
        payload = index.centroids.astype("<f8").tobytes() + index.clustering.assignment.astype("<i8").tobytes()
    elif isinstance(index, NswIndex):
        kind = b"NSW\0"
        header.update(M=index.m, efc=index.efc, seed=index.seed, entry=index.entry)
        offsets = np.zeros(len(index.adjacency) + 1, dtype="<i8")
        offsets[1:] = np.cumsum([len(a) for a in index.adjacency])
        flat = np.concatenate(index.adjacency).astype("<i8") if offsets[-1] else np.zeros(0, "<i8")
        payload = offsets.tobytes() + flat.tobytes()
    else:
        raise TypeError(f"cannot serialize {type(index).__name__}")
    hdr = json.dumps(header, sort_keys=True).encode()
    Path(path).write_bytes(MAGIC + kind + struct.pack("<I", len(hdr)) + hdr + payload)


def load_index(path, dataset: VectorDataset):
    raw = Path(path).read_bytes()
    if raw[:8] != MAGIC:
        raise ValueError(f"{path}: not a VSSCIDX1 container")
    kind = raw[8:12]
    (hlen,) = struct.unpack("<I", raw[12:16])
    header = json.loads(raw[16 : 16 + hlen])
    body = raw[16 + hlen :]
    if header["version"] != FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported format version {header['version']}")
    if header["dataset_sha256"] != dataset.sha256:
        raise ValueError(f"{path}: index was built on a different dataset")
    metric = Metric(header["metric"])
    if kind == b"IVF\0":
        nlist, d, n = header["nlist"], header["d"], header["n"]
        c_bytes = nlist * d * 8
        centroids = np.frombuffer(body[:c_bytes], dtype="<f8").reshape(nlist, d).copy()
        assign = np.frombuffer(body[c_bytes : c_bytes + n * 8], dtype="<i8").astype(np.int64)
        cl = Clustering(k=nlist, centroids=centroids, assignment=assign, variant=Variant(header["variant"]))
        order = np.argsort(assign, kind="stable")
        bounds = np.searchsorted(assign[order], np.arange(nlist + 1))
        postings = tuple(order[bounds[j] : bounds[j + 1]] for j in range(nlist))
        return IvfIndex(dataset=dataset, metric=metric, clustering=cl, postings=postings, seed=header["seed"])
    if kind == b"NSW\0":
        n = header["n"]
        offsets = np.frombuffer(body[: (n + 1) * 8], dtype="<i8")
        flat = np.frombuffer(body[(n + 1) * 8 :], dtype="<i8")
        adj = [flat[offsets[i] : offsets[i + 1]].astype(np.int64) for i in range(n)]
        idx = NswIndex(dataset, metric, header["M"], header["efc"], header["seed"], adj)
        idx.entry = header["entry"]
        return idx
    raise ValueError(f"{path}: unknown index kind {kind!r}")
