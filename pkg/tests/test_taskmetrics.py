import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import reference as ref
from vssc.dataset import LabelMap, NeighborList, PopularityMap
from vssc.taskmetrics import hit_at_k, label_recall, matching_score, synthetic_recall


def test_label_recall_example():
    labels = LabelMap([1, 1, 2, 1, 3])
    assert label_recall([[0, 1, 2]], labels, [1], 3) == pytest.approx(2 / 3)


def test_hit_at_k_example():
    labels = LabelMap([1, 1, 2, 1, 3])
    assert hit_at_k([[2, 4], [0, 1]], labels, [1, 1], 2) == 0.5


def test_matching_score_counts_every_item():
    labels = LabelMap([5, 5, 6])
    total, per_q = matching_score([[0, 1, 2]], labels, [frozenset({5})], PopularityMap({5: 2.5}), 3)
    assert total == 5.0 and per_q == 5.0


def test_synthetic_recall_example():
    assert synthetic_recall([[3, 1, 9]], [[1, 2, 3]], 3) == pytest.approx(2 / 3)


def test_short_lists_count_as_misses():
    labels = LabelMap([0, 0, 0])
    assert label_recall([[0]], labels, [0], 3) == pytest.approx(1 / 3)
    assert synthetic_recall([[0]], [[0, 1, 2]], 3) == pytest.approx(1 / 3)


def test_accepts_neighbor_lists():
    nl = NeighborList(np.array([0, 2]), np.array([0.0, 1.0]), 2)
    assert synthetic_recall([nl], [nl], 2) == 1.0


def test_errors():
    labels = LabelMap([0, 1])
    with pytest.raises(KeyError):
        label_recall([[7]], labels, [0], 1)
    with pytest.raises(KeyError):
        matching_score([[1]], labels, [frozenset({1})], PopularityMap({}), 1)
    with pytest.raises(ValueError):
        label_recall([[0, 1]], labels, [0], 1)
    with pytest.raises(ValueError):
        label_recall([[0]], labels, [0, 1], 1)


def _instance(rng):
    n = int(rng.integers(1, 30))
    m = int(rng.integers(1, 8))
    k = int(rng.integers(1, n + 1))
    n_labels = int(rng.integers(1, 6))
    labels = rng.integers(0, n_labels, size=n)
    retrieved = [rng.choice(n, size=int(rng.integers(0, k + 1)), replace=False).tolist() for _ in range(m)]
    truth = [rng.choice(n, size=k, replace=False).tolist() for _ in range(m)]
    qlabels = rng.integers(0, n_labels, size=m)
    hit_sets = [frozenset(rng.choice(n_labels, size=int(rng.integers(0, n_labels + 1)), replace=False).tolist()) for _ in range(m)]
    pop = {lab: float(rng.integers(0, 100)) / 4 for lab in range(n_labels)}
    return n, k, labels, retrieved, truth, qlabels, hit_sets, pop


def test_reference_agreement_1000_instances():
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        n, k, labels, retrieved, truth, ql, hs, pop = _instance(rng)
        lm = LabelMap(labels)
        lab = labels.tolist()
        assert label_recall(retrieved, lm, ql, k) == ref.label_recall(retrieved, lab, ql.tolist(), k)
        assert hit_at_k(retrieved, lm, ql, k) == ref.hit_at_k(retrieved, lab, ql.tolist())
        assert matching_score(retrieved, lm, hs, PopularityMap(pop), k)[0] == ref.matching_score(retrieved, lab, hs, pop)
        assert synthetic_recall(retrieved, truth, k) == ref.synthetic_recall(retrieved, truth, k)


@given(seed=st.integers(0, 2**32 - 1))
def test_query_permutation_invariance(seed):
    rng = np.random.default_rng(seed)
    n, k, labels, retrieved, truth, ql, hs, pop = _instance(rng)
    lm = LabelMap(labels)
    perm = rng.permutation(len(retrieved))
    r2 = [retrieved[i] for i in perm]
    assert label_recall(r2, lm, ql[perm], k) == pytest.approx(label_recall(retrieved, lm, ql, k), rel=1e-12)
    assert hit_at_k(r2, lm, ql[perm], k) == pytest.approx(hit_at_k(retrieved, lm, ql, k), rel=1e-12)
    t2 = [truth[i] for i in perm]
    assert synthetic_recall(r2, t2, k) == pytest.approx(synthetic_recall(retrieved, truth, k), rel=1e-12)


@given(seed=st.integers(0, 2**32 - 1))
def test_matching_score_additive_over_queries(seed):
    rng = np.random.default_rng(seed)
    n, k, labels, retrieved, truth, ql, hs, pop = _instance(rng)
    lm, pm = LabelMap(labels), PopularityMap(pop)
    whole = matching_score(retrieved, lm, hs, pm, k)[0]
    parts = sum(matching_score([r], lm, [h], pm, k)[0] for r, h in zip(retrieved, hs))
    assert whole == pytest.approx(parts, rel=1e-12)


@given(seed=st.integers(0, 2**32 - 1))
def test_label_recall_equals_hit_at_one(seed):
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, 3, size=10)
    retrieved = [[int(rng.integers(10))] for _ in range(5)]
    ql = rng.integers(0, 3, size=5)
    lm = LabelMap(labels)
    assert label_recall(retrieved, lm, ql, 1) == hit_at_k(retrieved, lm, ql, 1)
