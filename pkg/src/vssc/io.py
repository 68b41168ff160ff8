"""Readers and writers for fvecs/ivecs, label files and hit-set files.

fvecs/ivecs records are ``<int32 d> <d x payload>``, always little-endian.
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from .dataset import GroundTruth, LabelMap, Metric, NeighborList, PopularityMap, VectorDataset


class FormatError(ValueError):
    """A file exists but its contents are not a valid record stream."""


def _read_vecs(path, payload: str) -> np.ndarray:
    raw = Path(path).read_bytes()
    if not raw:
        return np.zeros((0, 0), dtype=payload)
    if len(raw) < 4:
        raise FormatError(f"{path}: truncated record header")
    d = int(np.frombuffer(raw, dtype="<i4", count=1)[0])
    if d <= 0:
        raise FormatError(f"{path}: record dimension must be positive, got {d}")
    rec = 4 * (d + 1)
    # walk headers so a bad dimension is reported before a bad length
    n_full, rem = divmod(len(raw), rec)
    words = np.frombuffer(raw, dtype="<i4", count=n_full * (d + 1)).reshape(n_full, d + 1)
    bad = np.nonzero(words[:, 0] != d)[0]
    if len(bad):
        r = int(bad[0])
        raise FormatError(f"{path}: record {r} has dimension {int(words[r, 0])}, expected {d}")
    if rem:
        if rem >= 4:
            tail_d = int(np.frombuffer(raw, dtype="<i4", count=1, offset=n_full * rec)[0])
            if tail_d != d:
                raise FormatError(f"{path}: record {n_full} has dimension {tail_d}, expected {d}")
        raise FormatError(f"{path}: truncated record {n_full} ({rem} of {rec} bytes)")
    body = np.frombuffer(raw, dtype="<i4").reshape(n_full, d + 1)[:, 1:]
    return np.ascontiguousarray(body).view("<" + np.dtype(payload).str[1:]).astype(payload)


def _write_vecs(path, matrix: np.ndarray, payload: str) -> None:
    m = np.asarray(matrix)
    if m.ndim != 2:
        raise ValueError("expected a 2-D matrix")
    n, d = m.shape
    out = np.empty((n, d + 1), dtype="<i4")
    out[:, 0] = d
    out[:, 1:] = np.ascontiguousarray(m, dtype=payload).astype("<" + np.dtype(payload).str[1:]).view("<i4")
    tmp = Path(str(path) + ".tmp")
    tmp.write_bytes(out.tobytes())
    os.replace(tmp, path)


def load_fvecs(path) -> VectorDataset:
    arr = _read_vecs(path, "f4")
    if arr.shape[0] == 0:
        raise FormatError(f"{path}: no vectors")
    if not np.isfinite(arr).all():
        r = int(np.argwhere(~np.isfinite(arr))[0, 0])
        raise FormatError(f"{path}: non-finite value in record {r}")
    return VectorDataset(arr, name=str(path))


def write_fvecs(path, data) -> None:
    values = data.values if isinstance(data, VectorDataset) else np.asarray(data, dtype=np.float32)
    _write_vecs(path, values, "f4")


def load_ivecs(path) -> np.ndarray:
    return _read_vecs(path, "i4").astype(np.int32)


def write_ivecs(path, matrix) -> None:
    _write_vecs(path, np.asarray(matrix), "i4")


def load_labels(path, dataset: VectorDataset | None = None) -> LabelMap:
    labels = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            s = line.strip()
            try:
                labels.append(int(s, 10))
            except ValueError:
                raise FormatError(f"{path}:{lineno}: not an integer label: {s!r}") from None
    lm = LabelMap(labels)
    if dataset is not None:
        lm.attach(dataset)
    return lm


def write_labels(path, labels) -> None:
    arr = labels.labels if isinstance(labels, LabelMap) else np.asarray(labels)
    Path(path).write_text("".join(f"{int(x)}\n" for x in arr), encoding="utf-8")


def load_hitsets(path) -> tuple[tuple[frozenset, ...], PopularityMap]:
    """Parse one ``label:popularity,...`` line per query."""
    hit_sets = []
    pop: dict[int, float] = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            s = line.strip()
            labels = set()
            if s:
                for pair in s.split(","):
                    try:
                        lab_s, pop_s = pair.split(":")
                        lab, p = int(lab_s.strip(), 10), float(pop_s)
                    except ValueError:
                        raise FormatError(f"{path}:{lineno}: malformed pair {pair!r}") from None
                    if lab < 0:
                        raise FormatError(f"{path}:{lineno}: negative label {lab}")
                    if not np.isfinite(p) or p < 0:
                        raise FormatError(f"{path}:{lineno}: popularity must be finite and >= 0, got {pop_s}")
                    if lab in pop and pop[lab] != p:
                        raise FormatError(
                            f"{path}:{lineno}: label {lab} has popularity {p}, previously {pop[lab]}"
                        )
                    pop[lab] = p
                    labels.add(lab)
            hit_sets.append(frozenset(labels))
    return tuple(hit_sets), PopularityMap(pop)


def write_hitsets(path, hit_sets, popularity: PopularityMap) -> None:
    lines = []
    for h in hit_sets:
        lines.append(",".join(f"{lab}:{popularity[lab]!r}" for lab in sorted(h)))
    Path(path).write_text("".join(line + "\n" for line in lines), encoding="utf-8")


def write_groundtruth(prefix, truth: GroundTruth) -> tuple[Path, Path]:
    """Write ``<prefix>.ivecs`` (indices) and ``<prefix>.fvecs`` (scores)."""
    ipath, fpath = Path(f"{prefix}.ivecs"), Path(f"{prefix}.fvecs")
    write_ivecs(ipath, truth.indices.astype(np.int32))
    _write_vecs(fpath, truth.scores.astype(np.float32), "f4")
    return ipath, fpath


def load_groundtruth(prefix, metric: Metric) -> GroundTruth:
    idx = load_ivecs(f"{prefix}.ivecs")
    sc = _read_vecs(f"{prefix}.fvecs", "f4")
    if idx.shape != sc.shape:
        raise FormatError(f"{prefix}: index shape {idx.shape} != score shape {sc.shape}")
    k = idx.shape[1]
    lists = tuple(NeighborList(i, s.astype(np.float64), k) for i, s in zip(idx, sc))
    return GroundTruth(metric=metric, k=k, lists=lists)
