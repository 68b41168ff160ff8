"""Command-line entry point: ``vssc <subcommand> ...``.

Exit codes: 0 success, 2 validation error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .dataset import Metric, QuerySet
from .harness import (
    FunnelConfig,
    SweepSpec,
    dumps,
    parse_int_list,
    parse_kv,
    run_evaluate,
    run_funnel,
    run_groundtruth,
    write_csv,
)
from .io import (
    FormatError,
    load_fvecs,
    load_groundtruth,
    load_hitsets,
    load_labels,
    write_fvecs,
    write_labels,
)
from .metafeatures import MetaFeatureProfile, RcConfig, profile
from .oracle import default_workers
from .selector import SelectionThresholds, select
from .synthgen import SynthConfig, generate

EXIT_OK, EXIT_VALIDATION, EXIT_IO = 0, 2, 3

log = logging.getLogger("vssc")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def _metric(text: str) -> Metric:
    m = Metric.parse(text)
    if m is Metric.COSINE:
        raise argparse.ArgumentTypeError("metric must be l2 or ip")
    return m


def _query_labels_path(queries: str, explicit: str | None) -> Path | None:
    if explicit:
        return Path(explicit)
    guess = Path(queries).with_suffix(".labels")
    return guess if guess.exists() else None


def _load_queries(path, labels_path=None, hitsets=None):
    vecs = load_fvecs(path)
    qlabels = None
    if labels_path is not None:
        qlabels = load_labels(labels_path).labels
    return QuerySet(vecs, query_labels=qlabels, hit_sets=hitsets)


def _write(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_synth(args) -> int:
    cfg = SynthConfig(
        n=args.n,
        d=args.d,
        k_classes=args.classes,
        spread=args.spread,
        norm_log_sigma=args.norm_log_sigma,
        query_count=args.queries,
        label_noise=args.label_noise,
        seed=args.seed,
    )
    data = generate(cfg)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_fvecs(out / "base.fvecs", data.dataset)
    write_labels(out / "base.labels", data.labels)
    write_fvecs(out / "query.fvecs", data.queries.vectors)
    write_labels(out / "query.labels", data.queries.query_labels)
    (out / "synth.json").write_text(json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n")
    log.info("wrote %d base and %d query vectors to %s", cfg.n, cfg.query_count, out)
    return EXIT_OK


def cmd_profile(args) -> int:
    ds = load_fvecs(args.data)
    rc = RcConfig(anchor_count=args.rc_anchors, mean_sample_count=args.rc_mean_samples, seed=args.seed)
    prof = profile(ds, k=args.k, rc_config=rc, seed=args.seed)
    _write(json.dumps(prof.to_dict(), indent=2, sort_keys=True) + "\n", args.out)
    return EXIT_OK


def cmd_select(args) -> int:
    if args.profile:
        raw = json.loads(Path(args.profile).read_text())
    else:
        ds = load_fvecs(args.data)
        raw = profile(ds, seed=args.seed).to_dict()
    thresholds = SelectionThresholds(cv_max=args.cv_max, ra_min_deg=args.ra_min, rc_max=args.rc_max)
    if isinstance(raw, dict) and "profiles" in raw:
        # fixture file: {"profiles": {name: {...}}}
        result = {}
        for name, entry in raw["profiles"].items():
            sel = select(MetaFeatureProfile.from_dict(entry), thresholds)
            result[name] = {**sel.to_dict(), "trace_lines": sel.trace_lines()}
    else:
        sel = select(MetaFeatureProfile.from_dict(raw), thresholds)
        result = {**sel.to_dict(), "trace_lines": sel.trace_lines()}
    _write(json.dumps(result, indent=2, sort_keys=True) + "\n", args.out)
    return EXIT_OK


def cmd_groundtruth(args) -> int:
    ds = load_fvecs(args.data)
    qs = load_fvecs(args.queries)
    run_groundtruth(ds, qs, args.k, args.metric, self_exclude=args.self_exclude, out_prefix=args.out_prefix)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    ds = load_fvecs(args.data)
    hit_sets = popularity = None
    if args.hitsets:
        hit_sets, popularity = load_hitsets(args.hitsets)
    qlabels = _query_labels_path(args.queries, args.query_labels) if args.labels else None
    queries = _load_queries(args.queries, qlabels, hit_sets)
    labels = load_labels(args.labels, ds) if args.labels else None

    meta_path = Path(f"{args.truth_prefix}.json")
    truth = load_groundtruth(args.truth_prefix, args.metric)
    if meta_path.exists():
        meta = json.loads(meta_path.read_text())
        if Metric.parse(meta["metric"]) is not args.metric:
            raise ValueError(f"ground truth was computed under {meta['metric']}, not {args.metric.display}")
        if meta.get("dataset_sha256") not in (None, ds.sha256):
            raise ValueError("ground truth belongs to a different dataset")
    search = parse_int_list(args.search_params) if args.search_params else (0,)
    sweep = SweepSpec(args.index, parse_kv(args.build_params), search, args.k, args.metric)
    tasks = None
    if args.task:
        tasks = tuple(args.task)
    elif hit_sets is None and queries.query_labels is None:
        raise ValueError("no task labels: pass --labels with query labels, or --hitsets")
    report = run_evaluate(
        ds, queries, truth, sweep, labels=labels, hit_sets=hit_sets, popularity=popularity,
        tasks=tasks, workers=args.workers or default_workers(),
    )
    _write(dumps(report), args.out)
    if args.csv:
        write_csv(report, args.csv)
    return EXIT_OK


def cmd_funnel(args) -> int:
    ds = load_fvecs(args.data)
    qlabels = _query_labels_path(args.queries, args.query_labels)
    if qlabels is None:
        raise ValueError("funnel needs query labels (--query-labels or a .labels file next to the queries)")
    queries = _load_queries(args.queries, qlabels)
    labels = load_labels(args.labels, ds)
    cfg = FunnelConfig(
        k=args.k,
        seed=args.seed,
        nlist=args.nlist,
        nsw_m=args.nsw_m,
        nsw_efc=args.nsw_efc,
        efs=parse_int_list(args.efs) if args.efs else None,
        nprobes=parse_int_list(args.nprobes) if args.nprobes else None,
        profile_k=args.profile_k,
        workers=args.workers,
    )
    report = run_funnel(ds, queries, labels, cfg)
    _write(dumps(report), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="vssc", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("synth", help="generate a labelled synthetic dataset")
    s.add_argument("--n", type=int, default=10000)
    s.add_argument("--d", type=int, default=32)
    s.add_argument("--classes", type=int, default=10)
    s.add_argument("--spread", type=float, default=0.05)
    s.add_argument("--norm-log-sigma", type=float, default=0.0)
    s.add_argument("--label-noise", type=float, default=0.0)
    s.add_argument("--queries", type=int, default=100)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out-dir", required=True)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("profile", help="compute DBI_E, DBI_C, CV, RA, RC")
    s.add_argument("--data", required=True)
    s.add_argument("--k", type=int, default=None, help="cluster count (default round(sqrt(n)))")
    s.add_argument("--rc-anchors", type=int, default=None)
    s.add_argument("--rc-mean-samples", type=int, default=None)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_profile)

    s = sub.add_parser("select", help="run the two-layer decision tree on a profile")
    src = s.add_mutually_exclusive_group(required=True)
    src.add_argument("--profile", help="profile JSON, or a fixture file with a 'profiles' map")
    src.add_argument("--data", help="fvecs file to profile first")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--cv-max", type=float, default=0.1)
    s.add_argument("--ra-min", type=float, default=60.0)
    s.add_argument("--rc-max", type=float, default=1.5)
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_select)

    s = sub.add_parser("groundtruth", help="exact top-K by exhaustive scan")
    s.add_argument("--data", required=True)
    s.add_argument("--queries", required=True)
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--metric", type=_metric, required=True, help="l2 or ip")
    s.add_argument("--self-exclude", action="store_true")
    s.add_argument("--out-prefix", required=True)
    s.set_defaults(func=cmd_groundtruth)

    s = sub.add_parser("evaluate", help="sweep one reference index against ground truth")
    s.add_argument("--data", required=True)
    s.add_argument("--queries", required=True)
    s.add_argument("--truth-prefix", required=True)
    s.add_argument("--labels", help="dataset label file")
    s.add_argument("--query-labels", help="query label file (default: <queries>.labels if present)")
    s.add_argument("--hitsets", help="per-query hit-set file (matching score)")
    s.add_argument("--task", action="append", choices=["label_recall", "hit_at_k", "matching_score"])
    s.add_argument("--index", choices=["ivf", "nsw", "flat"], required=True)
    s.add_argument("--metric", type=_metric, required=True)
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--build-params", default="")
    s.add_argument("--search-params", default="")
    s.add_argument("--workers", type=int, default=None)
    s.add_argument("--csv", default=None, help="also write the curve as CSV")
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("funnel", help="three-layer information-loss report")
    s.add_argument("--data", required=True)
    s.add_argument("--queries", required=True)
    s.add_argument("--labels", required=True)
    s.add_argument("--query-labels", default=None)
    s.add_argument("--k", type=int, default=10)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--nlist", type=int, default=None)
    s.add_argument("--nprobes", default=None)
    s.add_argument("--nsw-m", type=int, default=32)
    s.add_argument("--nsw-efc", type=int, default=256)
    s.add_argument("--efs", default=None)
    s.add_argument("--profile-k", type=int, default=None)
    s.add_argument("--workers", type=int, default=None)
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_funnel)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (OSError, FormatError) as exc:
        print(f"vssc: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, KeyError) as exc:
        print(f"vssc: invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
