"""Dataset meta-features: DBI (Euclidean / cosine), CV, RA and RC."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .clustering import Clustering, Variant, kmeans, make_rng
from .dataset import VectorDataset

RA_EPS = 1e-12
DUPLICATE_EPS = 1e-12


@dataclass(frozen=True)
class RcConfig:
    """Sampling for relative contrast. ``None`` sizes resolve against n."""

    anchor_count: int | None = None
    mean_sample_count: int | None = None
    seed: int = 0
    distance: str = "euclidean"

    def resolve(self, n: int) -> tuple[int, int]:
        anchors = min(n, 10000) if self.anchor_count is None else self.anchor_count
        mean_m = min(n - 1, 1000) if self.mean_sample_count is None else self.mean_sample_count
        if anchors < 1 or mean_m < 1:
            raise ValueError("anchor_count and mean_sample_count must be >= 1")
        if anchors > n:
            raise ValueError(f"anchor_count {anchors} exceeds n={n}")
        if mean_m > n - 1:
            raise ValueError(f"mean_sample_count {mean_m} exceeds n-1={n - 1}")
        if self.distance not in ("euclidean", "cosine"):
            raise ValueError(f"unknown RC distance {self.distance!r}")
        return anchors, mean_m


@dataclass(frozen=True)
class MetaFeatureProfile:
    dbi_e: float
    dbi_c: float
    cv: float
    ra_deg: float
    rc: float
    provenance: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        vals = (self.dbi_e, self.dbi_c, self.cv, self.ra_deg, self.rc)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"profile values must be finite: {vals}")
        if self.cv < 0:
            raise ValueError("cv must be >= 0")
        if not 0.0 <= self.ra_deg <= 180.0:
            raise ValueError("ra_deg must lie in [0, 180]")
        if self.rc <= 0:
            raise ValueError("rc must be > 0")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "MetaFeatureProfile":
        return cls(
            dbi_e=float(d["dbi_e"]),
            dbi_c=float(d["dbi_c"]),
            cv=float(d["cv"]),
            ra_deg=float(d["ra_deg"]),
            rc=float(d["rc"]),
            provenance=dict(d.get("provenance", {})),
        )


def _rows(dataset) -> np.ndarray:
    if isinstance(dataset, VectorDataset):
        return dataset.values64
    return np.asarray(dataset, dtype=np.float64)


def compute_dbi(dataset, clustering: Clustering, variant: str = "euclidean") -> float:
    """Davies-Bouldin index of ``clustering`` on ``dataset``.

    Cluster centres are recomputed as member means (of unit rows, then
    renormalised, for the cosine variant) so the value depends only on the partition. Dispersion
    is the mean member-to-centre distance.
    """
    variant = variant.lower()
    if variant not in ("euclidean", "cosine"):
        raise ValueError(f"unknown DBI variant {variant!r}")
    expected = Variant.EUCLIDEAN if variant == "euclidean" else Variant.SPHERICAL
    if clustering.variant is not expected:
        raise ValueError(f"{variant} DBI needs a {expected.value} clustering, got {clustering.variant.value}")
    x = _rows(dataset)
    assign = np.asarray(clustering.assignment)
    if len(assign) != x.shape[0]:
        raise ValueError("clustering does not belong to this dataset")
    labels = np.unique(assign)
    if len(labels) < 2:
        raise ValueError("DBI needs at least 2 non-empty clusters")

    if variant == "euclidean":
        centers = np.stack([x[assign == c].mean(axis=0) for c in labels])
        diff = x - centers[np.searchsorted(labels, assign)]
        member_d = np.sqrt((diff * diff).sum(axis=1))
        # row-wise differences: the Gram expansion loses precision for near centres
        cd = np.stack([np.sqrt(((centers - c) ** 2).sum(axis=1)) for c in centers])
    else:
        xn = np.sqrt((x * x).sum(axis=1))
        if (xn == 0).any():
            raise ValueError("cosine DBI undefined for zero-norm rows")
        xu = x / xn[:, None]
        centers = np.stack([xu[assign == c].mean(axis=0) for c in labels])
        cn = np.sqrt((centers * centers).sum(axis=1))
        if (cn == 0).any():
            j = int(labels[np.argmax(cn == 0)])
            raise ValueError(f"cluster {j} has a zero mean direction")
        cu = centers / cn[:, None]
        member_d = 1.0 - (xu * cu[np.searchsorted(labels, assign)]).sum(axis=1)
        cd = 1.0 - cu @ cu.T

    pos = np.searchsorted(labels, assign)
    sigma = np.bincount(pos, weights=member_d, minlength=len(labels)) / np.bincount(pos, minlength=len(labels))
    m = len(labels)
    off = ~np.eye(m, dtype=bool)
    if (cd[off] <= 0.0).any():
        i, j = np.argwhere((cd <= 0.0) & off)[0]
        raise ValueError(f"clusters {int(labels[i])} and {int(labels[j])} have coincident centroids")
    ratio = np.full((m, m), -np.inf)
    ratio[off] = ((sigma[:, None] + sigma[None, :]) / np.where(off, cd, 1.0))[off]
    return float(ratio.max(axis=1).mean())


def compute_cv(dataset) -> float:
    x = _rows(dataset)
    norms = np.sqrt((x * x).sum(axis=1))
    mean = norms.mean()
    if mean == 0.0:
        raise ValueError("CV undefined: every row is the zero vector")
    return float(norms.std() / mean)


def compute_ra(dataset) -> float:
    """Mean angle, in degrees, between each row and the global mean vector."""
    x = _rows(dataset)
    c = x.mean(axis=0)
    cn = math.sqrt(float((c * c).sum()))
    xn = np.sqrt((x * x).sum(axis=1))
    cosv = (x @ c) / (xn * cn + RA_EPS)
    return float(np.degrees(np.arccos(np.clip(cosv, -1.0, 1.0))).mean())


def _pair_distances(x: np.ndarray, anchor: int, rows: np.ndarray, distance: str) -> np.ndarray:
    if distance == "euclidean":
        diff = x[rows] - x[anchor]
        return np.sqrt((diff * diff).sum(axis=1))
    a = x[anchor]
    xr = x[rows]
    denom = np.sqrt((xr * xr).sum(axis=1)) * math.sqrt(float((a * a).sum()))
    cos = np.divide(xr @ a, denom, out=np.zeros(len(rows)), where=denom > 0)
    return 1.0 - cos


def compute_rc(dataset, config: RcConfig | None = None) -> float:
    """Mean ratio of sampled mean distance to nearest-neighbour distance."""
    config = config or RcConfig()
    x = _rows(dataset)
    n = x.shape[0]
    if n < 3:
        raise ValueError(f"RC needs n >= 3, got {n}")
    anchors_n, mean_m = config.resolve(n)
    rng = make_rng(config.seed)
    if anchors_n == n:
        anchors = np.arange(n)
    else:
        anchors = np.sort(rng.choice(n, size=anchors_n, replace=False))

    ratios = []
    for a in anchors:
        a = int(a)
        # exhaustive float64 scan: the nearest neighbour is exact
        others = np.concatenate([np.arange(a), np.arange(a + 1, n)])
        dist = _pair_distances(x, a, others, config.distance)
        d_min = float(dist.min())
        if mean_m == n - 1:
            d_mean = float(dist.mean())
        else:
            pick = rng.choice(n - 1, size=mean_m, replace=False)
            d_mean = float(dist[pick].mean())
        if d_min < DUPLICATE_EPS:
            continue
        ratios.append(d_mean / d_min)
    if not ratios:
        raise ValueError("RC undefined: every anchor has an exact duplicate")
    return float(np.mean(ratios))


def default_k(n: int) -> int:
    return int(min(max(round(math.sqrt(n)), 2), 4096, n))


def profile(
    dataset: VectorDataset,
    k: int | None = None,
    rc_config: RcConfig | None = None,
    seed: int = 0,
    max_iters: int = 50,
) -> MetaFeatureProfile:
    k = default_k(dataset.n) if k is None else k
    rc_config = rc_config or RcConfig(seed=seed)
    eu = kmeans(dataset, k, Variant.EUCLIDEAN, max_iters=max_iters, seed=seed)
    sp = kmeans(dataset, k, Variant.SPHERICAL, max_iters=max_iters, seed=seed)
    anchors, mean_m = rc_config.resolve(dataset.n)
    return MetaFeatureProfile(
        dbi_e=compute_dbi(dataset, eu, "euclidean"),
        dbi_c=compute_dbi(dataset, sp, "cosine"),
        cv=compute_cv(dataset),
        ra_deg=compute_ra(dataset),
        rc=compute_rc(dataset, rc_config),
        provenance={
            "k": k,
            "seed": seed,
            "max_iters": max_iters,
            "rc_anchor_count": anchors,
            "rc_mean_sample_count": mean_m,
            "rc_seed": rc_config.seed,
            "rc_distance": rc_config.distance,
            "n": dataset.n,
            "d": dataset.d,
            "dataset_sha256": dataset.sha256,
        },
    )
