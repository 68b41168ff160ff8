"""Measure the funnel fixture ceilings with the exact oracle and freeze them.

Writes fixtures/funnel_fixtures.json. Hit counts are stored as integers so
the acceptance suite can compare exactly; recall = hits / (queries * K).

    python3 scripts/freeze_funnel_fixtures.py
"""

import json
from pathlib import Path

from vssc.oracle import batch_ground_truth
from vssc.synthgen import SynthConfig, generate

K = 10
BASE = dict(n=3000, d=32, k_classes=10, query_count=200, seed=7)
FIXTURES = {
    "norm_skewed": dict(spread=0.2, norm_log_sigma=0.6, label_noise=0.0),
    "unit_norm": dict(spread=0.2, norm_log_sigma=0.0, label_noise=0.0),
    "label_noise": dict(spread=0.05, norm_log_sigma=0.0, label_noise=0.3),
}


def label_hits(data, metric):
    truth = batch_ground_truth(data.dataset, data.queries, K, metric)
    ql = data.queries.query_labels
    return int(sum((data.labels.labels[nl.indices] == ql[i]).sum() for i, nl in enumerate(truth.lists)))


def main():
    out = {"k": K, "fixtures": {}}
    for name, knobs in FIXTURES.items():
        cfg = SynthConfig(**BASE, **knobs)
        data = generate(cfg)
        hits = {m: label_hits(data, m) for m in ("l2", "ip")}
        out["fixtures"][name] = {
            "config": cfg.to_dict(),
            "label_hits": hits,
            "denominator": cfg.query_count * K,
            "label_recall": {m: h / (cfg.query_count * K) for m, h in hits.items()},
        }
        print(name, out["fixtures"][name]["label_recall"])
    path = Path(__file__).resolve().parents[1] / "fixtures" / "funnel_fixtures.json"
    path.write_text(json.dumps(out, indent=2, sort_keys=True) + "\n")
    print("wrote", path)


if __name__ == "__main__":
    main()
