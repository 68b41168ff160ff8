"""Seeded synthetic embeddings with tunable class spread and norm skew.

Randomness comes from numpy's PCG64 bit generator seeded with the config
seed; draws happen in a fixed order (directions, base labels, base noise,
base norms, label noise, then the same for queries).
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .clustering import make_rng
from .dataset import LabelMap, QuerySet, VectorDataset

MAX_DIRECTION_DOT = 0.9
_MAX_REJECTIONS = 10000


@dataclass(frozen=True)
class SynthConfig:
    n: int = 1000
    d: int = 32
    k_classes: int = 10
    spread: float = 0.05
    norm_log_sigma: float = 0.0
    query_count: int = 100
    label_noise: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.d < 2:
            raise ValueError("d must be >= 2")
        if not 1 <= self.k_classes <= self.n:
            raise ValueError("need n >= k_classes >= 1")
        if self.spread < 0 or self.norm_log_sigma < 0:
            raise ValueError("spread and norm_log_sigma must be >= 0")
        if not 0.0 <= self.label_noise <= 1.0:
            raise ValueError("label_noise must be in [0, 1]")
        if self.query_count < 1:
            raise ValueError("query_count must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class SynthData:
    dataset: VectorDataset
    labels: LabelMap
    queries: QuerySet
    true_classes: np.ndarray
    config: SynthConfig


def class_directions(k: int, d: int, rng: np.random.Generator) -> np.ndarray:
    dirs = np.empty((k, d))
    for j in range(k):
        for _ in range(_MAX_REJECTIONS):
            v = rng.standard_normal(d)
            v /= np.linalg.norm(v)
            if j == 0 or (dirs[:j] @ v).max() <= MAX_DIRECTION_DOT:
                dirs[j] = v
                break
        else:
            raise ValueError(f"could not place {k} class directions in d={d}")
    return dirs


def _balanced_classes(count: int, k: int, rng: np.random.Generator) -> np.ndarray:
    return rng.permutation(np.arange(count) % k)


def _draw(dirs, classes, spread, sigma, rng) -> np.ndarray:
    noise = rng.standard_normal((len(classes), dirs.shape[1]))
    v = dirs[classes] + spread * noise
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    scale = np.exp(sigma * rng.standard_normal(len(classes)))
    return (v * scale[:, None]).astype(np.float32)


def generate(config: SynthConfig) -> SynthData:
    rng = make_rng(config.seed)
    dirs = class_directions(config.k_classes, config.d, rng)
    classes = _balanced_classes(config.n, config.k_classes, rng)
    base = _draw(dirs, classes, config.spread, config.norm_log_sigma, rng)
    labels = classes.copy()
    flip = rng.random(config.n) < config.label_noise
    labels[flip] = rng.integers(config.k_classes, size=int(flip.sum()))
    q_classes = _balanced_classes(config.query_count, config.k_classes, rng)
    q_vecs = _draw(dirs, q_classes, config.spread, config.norm_log_sigma, rng)
    return SynthData(
        dataset=VectorDataset(base, name="synth"),
        labels=LabelMap(labels),
        queries=QuerySet(VectorDataset(q_vecs), query_labels=q_classes),
        true_classes=classes,
        config=config,
    )
