"""Pipeline orchestration: ground truth, parameter sweeps and the funnel report.

Reports are plain JSON-able dicts. Anything wall-clock dependent lives under
a ``timing`` or ``execution`` key; :func:`deterministic_view` strips those so
the remainder can be compared byte-for-byte across reruns and worker counts.
"""

from __future__ import annotations

import csv
import hashlib
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .dataset import GroundTruth, LabelMap, Metric, PopularityMap, QuerySet, VectorDataset
from .metafeatures import MetaFeatureProfile, RcConfig, profile
from .oracle import batch_ground_truth, default_workers
from .refindex import FlatIndex, build_ivf, build_nsw, default_nlist
from .selector import SelectionThresholds, select
from .taskmetrics import hit_at_k, label_recall, matching_score, synthetic_recall

INDEX_KINDS = ("flat", "ivf", "nsw")
TIMING_KEYS = frozenset({"timing", "execution"})
TASKS = ("label_recall", "hit_at_k", "matching_score")


@dataclass(frozen=True)
class SweepSpec:
    index: str
    build_params: dict
    search_params: tuple[int, ...]
    k: int
    metric: Metric

    def __post_init__(self):
        if self.index not in INDEX_KINDS:
            raise ValueError(f"unknown index kind {self.index!r}; expected one of {INDEX_KINDS}")
        object.__setattr__(self, "metric", Metric.parse(self.metric))
        params = tuple(int(p) for p in self.search_params)
        if not params:
            raise ValueError("search-param list must not be empty")
        if any(b <= a for a, b in zip(params, params[1:])):
            raise ValueError(f"search params must be strictly increasing: {params}")
        object.__setattr__(self, "search_params", params)
        object.__setattr__(self, "build_params", dict(self.build_params))
        if self.k < 1:
            raise ValueError("K must be >= 1")

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "build_params": dict(sorted(self.build_params.items())),
            "search_params": list(self.search_params),
            "k": self.k,
            "metric": self.metric.display,
        }


def parse_kv(text: str | None) -> dict:
    """``"nlist=64,seed=1"`` -> ``{"nlist": 64, "seed": 1}``."""
    out: dict = {}
    if not text:
        return out
    for item in text.split(","):
        if not item.strip():
            continue
        if "=" not in item:
            raise ValueError(f"build param {item!r} is not key=value")
        key, val = item.split("=", 1)
        try:
            out[key.strip()] = int(val)
        except ValueError:
            raise ValueError(f"build param {key.strip()} must be an integer, got {val!r}") from None
    return out


def parse_int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise ValueError(f"expected a comma-separated integer list, got {text!r}") from None


def _sha(arr: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(arr).tobytes()).hexdigest()


def build_index(dataset: VectorDataset, sweep: SweepSpec):
    bp = sweep.build_params
    if sweep.index == "flat":
        return FlatIndex(dataset, sweep.metric)
    if sweep.index == "ivf":
        unknown = set(bp) - {"nlist", "seed", "max_iters"}
        if unknown:
            raise ValueError(f"unknown ivf build params {sorted(unknown)}")
        return build_ivf(
            dataset,
            sweep.metric,
            nlist=bp.get("nlist"),
            seed=bp.get("seed", 0),
            max_iters=bp.get("max_iters", 50),
        )
    unknown = set(bp) - {"M", "m", "efc", "seed"}
    if unknown:
        raise ValueError(f"unknown nsw build params {sorted(unknown)}")
    return build_nsw(
        dataset,
        sweep.metric,
        m=bp.get("M", bp.get("m", 32)),
        efc=bp.get("efc", 256),
        seed=bp.get("seed", 0),
    )


def run_queries(index, queries: VectorDataset, k: int, param, workers: int = 1):
    """Search every query; returns (lists in query order, wall seconds)."""
    qv = queries.values
    start = time.perf_counter()
    if workers <= 1:
        lists = [index.search(q, k, param) for q in qv]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            lists = list(pool.map(lambda q: index.search(q, k, param), qv))
    return lists, time.perf_counter() - start


def _default_tasks(queries: QuerySet, hit_sets) -> tuple[str, ...]:
    tasks = []
    if queries.query_labels is not None:
        tasks += ["label_recall", "hit_at_k"]
    if hit_sets is not None:
        tasks.append("matching_score")
    return tuple(tasks)


def compute_task_metrics(lists, k, tasks, labels, queries: QuerySet, hit_sets=None, popularity=None) -> dict:
    out = {}
    for task in tasks:
        if task not in TASKS:
            raise ValueError(f"unknown task metric {task!r}")
        if labels is None:
            raise ValueError(f"{task} needs dataset labels")
        if task in ("label_recall", "hit_at_k"):
            if queries.query_labels is None:
                raise ValueError(f"{task} needs query labels")
            fn = label_recall if task == "label_recall" else hit_at_k
            out[task] = fn(lists, labels, queries.query_labels, k)
        else:
            if hit_sets is None or popularity is None:
                raise ValueError("matching_score needs hit sets with popularity")
            total, per_query = matching_score(lists, labels, hit_sets, popularity, k)
            out["matching_score"] = total
            out["matching_score_per_query"] = per_query
    return out


def run_evaluate(
    dataset: VectorDataset,
    queries: QuerySet,
    truth: GroundTruth,
    sweep: SweepSpec,
    labels: LabelMap | None = None,
    hit_sets=None,
    popularity: PopularityMap | None = None,
    tasks: tuple[str, ...] | None = None,
    workers: int | None = None,
) -> dict:
    queries.check_dim(dataset)
    if truth.metric is not sweep.metric:
        raise ValueError(f"ground truth metric {truth.metric.display} != sweep metric {sweep.metric.display}")
    if truth.k < sweep.k:
        raise ValueError(f"ground truth has K={truth.k}, sweep needs K={sweep.k}")
    if len(truth) != queries.m:
        raise ValueError(f"ground truth covers {len(truth)} queries, query set has {queries.m}")
    if hit_sets is None and queries.hit_sets is not None:
        hit_sets = queries.hit_sets
    if tasks is None:
        tasks = _default_tasks(queries, hit_sets)
    workers = 1 if workers is None else workers
    truth_k = [nl.indices[: sweep.k] for nl in truth.lists]

    t0 = time.perf_counter()
    index = build_index(dataset, sweep)
    build_s = time.perf_counter() - t0
    params = (None,) if sweep.index == "flat" else sweep.search_params
    if sweep.index == "ivf":
        bad = [p for p in params if not 1 <= p <= index.nlist]
        if bad:
            raise ValueError(f"nprobe values {bad} outside [1, nlist={index.nlist}]")

    points = []
    for p in params:
        lists, wall = run_queries(index, queries.vectors, sweep.k, p, workers)
        point = {
            "param": p,
            "synthetic_recall": synthetic_recall(lists, truth_k, sweep.k),
            "short_lists": int(sum(nl.short for nl in lists)),
        }
        point.update(compute_task_metrics(lists, sweep.k, tasks, labels, queries, hit_sets, popularity))
        point["timing"] = {
            "total_s": wall,
            "mean_latency_s": wall / queries.m,
            "qps": queries.m / wall if wall > 0 else float("inf"),
        }
        points.append(point)

    build_params = dict(sorted(index.build_params().items()))
    return {
        "kind": "eval_report",
        "tool_version": __version__,
        "sweep": sweep.to_dict(),
        "index_build_params": build_params,
        "tasks": list(tasks),
        "inputs": _inputs_meta(dataset, queries, labels, hit_sets),
        "points": points,
        "execution": {"workers": workers, "build_s": build_s, "timing_threads": workers},
    }


def _inputs_meta(dataset, queries, labels, hit_sets) -> dict:
    meta = {
        "dataset_sha256": dataset.sha256,
        "queries_sha256": queries.vectors.sha256,
        "n": dataset.n,
        "d": dataset.d,
        "query_count": queries.m,
    }
    if labels is not None:
        meta["labels_sha256"] = _sha(labels.labels.astype("<i8"))
    if queries.query_labels is not None:
        meta["query_labels_sha256"] = _sha(queries.query_labels.astype("<i8"))
    if hit_sets is not None:
        meta["hitsets_sha256"] = hashlib.sha256(
            json.dumps([sorted(h) for h in hit_sets]).encode()
        ).hexdigest()
    return meta


def deterministic_view(report):
    """Copy of ``report`` with every timing/execution block removed."""
    if isinstance(report, dict):
        return {k: deterministic_view(v) for k, v in report.items() if k not in TIMING_KEYS}
    if isinstance(report, list):
        return [deterministic_view(v) for v in report]
    return report


def dumps(report, deterministic: bool = False) -> str:
    body = deterministic_view(report) if deterministic else report
    return json.dumps(body, indent=2, sort_keys=True, allow_nan=True) + "\n"


def write_csv(report: dict, path) -> None:
    """One row per sweep point: param, recall, task metrics, latency, QPS."""
    points = report["points"]
    metric_cols = [c for c in TASKS + ("matching_score_per_query",) if points and c in points[0]]
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["param", "synthetic_recall", *metric_cols, "mean_latency_s", "qps"])
        for p in points:
            w.writerow(
                [p["param"], p["synthetic_recall"], *(p[c] for c in metric_cols),
                 p["timing"]["mean_latency_s"], p["timing"]["qps"]]
            )


def default_nprobes(nlist: int) -> tuple[int, ...]:
    out = []
    p = 1
    while p < nlist:
        out.append(p)
        p *= 2
    out.append(nlist)
    return tuple(out)


def default_efs(k: int, n: int, cap: int = 512) -> tuple[int, ...]:
    """K, 2K, 4K, ... up to min(n, cap)."""
    top = max(k, min(n, cap))
    out = []
    ef = k
    while ef < top:
        out.append(ef)
        ef *= 2
    out.append(top)
    return tuple(out)


@dataclass
class FunnelConfig:
    k: int = 10
    seed: int = 0
    nlist: int | None = None
    nprobes: tuple[int, ...] | None = None
    nsw_m: int = 32
    nsw_efc: int = 256
    efs: tuple[int, ...] | None = None
    profile_k: int | None = None
    rc_config: RcConfig | None = None
    thresholds: SelectionThresholds = field(default_factory=SelectionThresholds)
    workers: int | None = None


def run_groundtruth(dataset, queries, k, metric, self_exclude=False, workers=None, out_prefix=None):
    """Exact ground truth; optionally written as ivecs/fvecs plus a JSON sidecar."""
    from .io import write_groundtruth

    truth = batch_ground_truth(dataset, queries, k, metric, self_exclude=self_exclude, workers=workers)
    if out_prefix is not None:
        write_groundtruth(out_prefix, truth)
        qv = queries.vectors if isinstance(queries, QuerySet) else queries
        meta = {
            "metric": truth.metric.display,
            "k": k,
            "self_exclude": bool(self_exclude),
            "dataset_sha256": dataset.sha256,
            "queries_sha256": qv.sha256,
            "tool_version": __version__,
        }
        Path(f"{out_prefix}.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return truth


def run_funnel(
    dataset: VectorDataset,
    queries: QuerySet,
    labels: LabelMap,
    config: FunnelConfig = FunnelConfig(),
    selection_profile: MetaFeatureProfile | None = None,
) -> dict:
    if labels is None or queries.query_labels is None:
        raise ValueError("the funnel needs dataset labels and query labels")
    labels.attach(dataset)
    queries.check_dim(dataset)
    k = config.k
    workers = config.workers or default_workers()
    tasks = ("label_recall",)

    truths = {}
    layer1 = {}
    for metric in (Metric.EUCLIDEAN, Metric.INNER_PRODUCT):
        truth = batch_ground_truth(dataset, queries, k, metric, workers=workers)
        truths[metric] = truth
        layer1[metric.display] = {
            "label_recall": label_recall(truth.lists, labels, queries.query_labels, k),
            "synthetic_recall": synthetic_recall(truth.lists, truth, k),
        }

    nlist = config.nlist or default_nlist(dataset.n)
    nprobes = config.nprobes or default_nprobes(nlist)
    ivf_build = {"nlist": nlist, "seed": config.seed}

    layer2_curves = {}
    for metric, truth in truths.items():
        sweep = SweepSpec("ivf", ivf_build, nprobes, k, metric)
        layer2_curves[metric.display] = run_evaluate(
            dataset, queries, truth, sweep, labels=labels, tasks=tasks, workers=workers
        )
    ceiling_e = layer1[Metric.EUCLIDEAN.display]["label_recall"]
    ceiling_ip = layer1[Metric.INNER_PRODUCT.display]["label_recall"]

    prof = selection_profile or profile(dataset, k=config.profile_k, rc_config=config.rc_config, seed=config.seed)
    selection = select(prof, config.thresholds)
    chosen = Metric.INNER_PRODUCT if selection.metric == "InnerProduct" else Metric.EUCLIDEAN

    efs = config.efs or default_efs(k, dataset.n)
    layer3 = {
        "metric": chosen.display,
        "ivf": layer2_curves[chosen.display],
        "nsw": run_evaluate(
            dataset,
            queries,
            truths[chosen],
            SweepSpec("nsw", {"M": config.nsw_m, "efc": config.nsw_efc, "seed": config.seed}, efs, k, chosen),
            labels=labels,
            tasks=tasks,
            workers=workers,
        ),
    }
    ceiling = layer1[chosen.display]["label_recall"]
    best_approx = max(p["label_recall"] for kind in ("ivf", "nsw") for p in layer3[kind]["points"])
    violations = [
        {"index": kind, "param": p["param"], "label_recall": p["label_recall"]}
        for kind in ("ivf", "nsw")
        for p in layer3[kind]["points"]
        if p["label_recall"] > ceiling
    ]
    return {
        "kind": "funnel_report",
        "tool_version": __version__,
        "k": k,
        "seed": config.seed,
        "inputs": _inputs_meta(dataset, queries, labels, None),
        "layer1": layer1,
        "layer2": {
            "ceiling_delta_euclidean_minus_ip": ceiling_e - ceiling_ip,
            "curves": layer2_curves,
        },
        "layer3": layer3,
        "profile": prof.to_dict(),
        "selection": selection.to_dict(),
        "dominance": {
            "ceiling": ceiling,
            "best_approximate": best_approx,
            "holds": not violations,
            "violations": violations,
        },
        "execution": {"workers": workers},
    }
