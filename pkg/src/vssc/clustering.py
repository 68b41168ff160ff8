"""Lloyd's k-means with k-means++ seeding, Euclidean and spherical variants."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .dataset import VectorDataset

_CHUNK = 4096


class Variant(str, enum.Enum):
    EUCLIDEAN = "euclidean"
    SPHERICAL = "spherical"


@dataclass(frozen=True)
class Clustering:
    k: int
    centroids: np.ndarray
    assignment: np.ndarray
    variant: Variant
    iterations: int = 0
    converged: bool = False
    inertia_history: tuple[float, ...] = field(default=(), compare=False)

    def members(self, j: int) -> np.ndarray:
        return np.nonzero(self.assignment == j)[0]

    def sizes(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=self.k)


def make_rng(seed: int) -> np.random.Generator:
    # PCG64 pinned explicitly; default_rng could change generator in future numpy
    return np.random.Generator(np.random.PCG64(seed))


def _sqdist_to(x: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances, n x k, computed in fixed-size row chunks."""
    out = np.empty((x.shape[0], c.shape[0]))
    cc = (c * c).sum(axis=1)
    for s in range(0, x.shape[0], _CHUNK):
        xb = x[s : s + _CHUNK]
        d = (xb * xb).sum(axis=1)[:, None] - 2.0 * (xb @ c.T) + cc[None, :]
        np.maximum(d, 0.0, out=d)
        out[s : s + _CHUNK] = d
    return out


def _cost_matrix(x, c, variant):
    # smaller is better in both variants
    if variant is Variant.EUCLIDEAN:
        return _sqdist_to(x, c)
    out = np.empty((x.shape[0], c.shape[0]))
    for s in range(0, x.shape[0], _CHUNK):
        out[s : s + _CHUNK] = -(x[s : s + _CHUNK] @ c.T)
    return out


def _normalize_rows(x: np.ndarray) -> np.ndarray:
    n = np.sqrt((x * x).sum(axis=1, keepdims=True))
    return x / n


def _kmeans_pp(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = x.shape[0]
    first = int(rng.integers(n))
    centers = [first]
    d2 = _sqdist_to(x, x[first : first + 1])[:, 0]
    for _ in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            # remaining points all coincide with chosen centers
            pick = int(rng.integers(n))
        else:
            r = rng.random() * total
            pick = int(np.searchsorted(np.cumsum(d2), r, side="right"))
            pick = min(pick, n - 1)
        centers.append(pick)
        d2 = np.minimum(d2, _sqdist_to(x, x[pick : pick + 1])[:, 0])
    return x[np.array(centers)].copy()


def _update(x, assign, k, variant, old):
    sums = np.zeros((k, x.shape[1]))
    np.add.at(sums, assign, x)
    counts = np.bincount(assign, minlength=k).astype(np.float64)
    new = old.copy()
    nz = counts > 0
    new[nz] = sums[nz] / counts[nz, None]
    if variant is Variant.SPHERICAL:
        norms = np.sqrt((new * new).sum(axis=1))
        ok = norms > 0
        new[ok] /= norms[ok, None]
        new[~ok] = old[~ok]  # members cancel out exactly: keep previous direction
    return new


def _reseed_empty(x, assign, cost, centroids, k):
    """Move the worst-fitting points into empty clusters; returns changed flag."""
    counts = np.bincount(assign, minlength=k)
    empty = np.nonzero(counts == 0)[0]
    if not len(empty):
        return False
    own = cost[np.arange(len(assign)), assign]
    order = np.lexsort((np.arange(len(own)), -own))  # worst first, ascending index on ties
    taken = 0
    for j in empty:
        while taken < len(order):
            p = int(order[taken])
            taken += 1
            if counts[assign[p]] > 1:
                counts[assign[p]] -= 1
                assign[p] = j
                counts[j] = 1
                centroids[j] = x[p]
                break
        else:
            raise ValueError("cannot fill empty clusters: too few distinct points")
    return True


def _inertia(x, assign, centroids, variant) -> float:
    if variant is Variant.EUCLIDEAN:
        diff = x - centroids[assign]
        return float((diff * diff).sum())
    return float((1.0 - (x * centroids[assign]).sum(axis=1)).sum())


def kmeans(
    dataset: VectorDataset | np.ndarray,
    k: int,
    variant: Variant | str = Variant.EUCLIDEAN,
    max_iters: int = 50,
    seed: int = 0,
    tol: float = 1e-4,
) -> Clustering:
    variant = Variant(variant)
    x = dataset.values64 if isinstance(dataset, VectorDataset) else np.asarray(dataset, dtype=np.float64)
    n = x.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k={k} must be in [1, n={n}]")
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    if variant is Variant.SPHERICAL:
        norms = np.sqrt((x * x).sum(axis=1))
        zero = np.nonzero(norms == 0)[0]
        if len(zero):
            raise ValueError(f"spherical k-means needs nonzero rows; row {int(zero[0])} is zero")
        x = x / norms[:, None]

    if k > 1 and len(np.unique(x, axis=0)) < k:
        raise ValueError(f"k={k} exceeds the number of distinct points")

    rng = make_rng(seed)
    centroids = _kmeans_pp(x, k, rng)
    if variant is Variant.SPHERICAL:
        centroids = _normalize_rows(centroids)

    history = []
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        cost = _cost_matrix(x, centroids, variant)
        assign = np.argmin(cost, axis=1)
        _reseed_empty(x, assign, cost, centroids, k)
        history.append(_inertia(x, assign, centroids, variant))
        new = _update(x, assign, k, variant, centroids)
        shift = float(np.sqrt(((new - centroids) ** 2).sum(axis=1)).max())
        centroids = new
        if shift < tol:
            converged = True
            break

    # final assignment is the argmin over the returned centroids
    for _ in range(k + 1):
        cost = _cost_matrix(x, centroids, variant)
        assign = np.argmin(cost, axis=1)
        if not _reseed_empty(x, assign, cost, centroids, k):
            break
    else:
        raise ValueError("could not fill empty clusters: too few distinct points")
    return Clustering(
        k=k,
        centroids=centroids,
        assignment=assign.astype(np.int64),
        variant=variant,
        iterations=it,
        converged=converged,
        inertia_history=tuple(history),
    )
