"""IVF nprobe sweep under both metrics on a synthetic dataset; writes CSV curves.

    python3 scripts/ivf_sweep.py --sigma 0.6 --out-dir results/
"""

import argparse
from pathlib import Path

from vssc.harness import SweepSpec, default_nprobes, run_evaluate, write_csv
from vssc.oracle import batch_ground_truth
from vssc.refindex import default_nlist
from vssc.synthgen import SynthConfig, generate


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=5000)
    ap.add_argument("--sigma", type=float, default=0.6)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--k", type=int, default=10)
    ap.add_argument("--out-dir", default="results")
    args = ap.parse_args()

    data = generate(SynthConfig(n=args.n, d=32, k_classes=10, spread=0.2, norm_log_sigma=args.sigma,
                                query_count=200, seed=args.seed))
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    nprobes = default_nprobes(default_nlist(args.n))
    for metric in ("l2", "ip"):
        truth = batch_ground_truth(data.dataset, data.queries, args.k, metric)
        rep = run_evaluate(data.dataset, data.queries, truth,
                           SweepSpec("ivf", {"seed": args.seed}, nprobes, args.k, metric), labels=data.labels)
        write_csv(rep, out / f"ivf_{metric}.csv")
        for p in rep["points"]:
            print(f"{metric} nprobe={p['param']:4d} recall={p['synthetic_recall']:.4f} "
                  f"label_recall={p['label_recall']:.4f} qps={p['timing']['qps']:.0f}")


if __name__ == "__main__":
    main()
