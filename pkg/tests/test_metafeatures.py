import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import reference as ref
from vssc.clustering import Clustering, Variant, kmeans
from vssc.dataset import VectorDataset
from vssc.metafeatures import (
    MetaFeatureProfile,
    RcConfig,
    compute_cv,
    compute_dbi,
    compute_ra,
    compute_rc,
    default_k,
    profile,
)
from vssc.synthgen import SynthConfig, generate


def _clustering(assign, variant=Variant.EUCLIDEAN, k=None):
    assign = np.asarray(assign)
    k = k or int(assign.max()) + 1
    return Clustering(k=k, centroids=np.zeros((k, 1)), assignment=assign, variant=variant)


# -- DBI ---------------------------------------------------------------------


def test_dbi_zero_dispersion():
    x = np.array([[0.0, 0.0], [2.0, 0.0]])
    assert compute_dbi(x, _clustering([0, 1]), "euclidean") == 0.0


def test_dbi_one_dimensional_hand_value():
    x = np.array([[0.0], [0.2], [10.0], [10.2]])
    cl = _clustering([0, 0, 1, 1])
    assert compute_dbi(x, cl, "euclidean") == pytest.approx(0.02, rel=1e-12)
    assert ref.dbi(ref.rows_of(x), cl.assignment, "euclidean") == pytest.approx(0.02, rel=1e-12)


def test_dbi_cosine_antipodal_clusters():
    rng = np.random.default_rng(3)
    base = np.array([1.0, 0.0, 0.0])
    a = base + 0.01 * rng.standard_normal((20, 3))
    b = -base + 0.01 * rng.standard_normal((20, 3))
    x = np.vstack([a, b])
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    cl = _clustering([0] * 20 + [1] * 20, Variant.SPHERICAL)
    got = compute_dbi(x, cl, "cosine")
    want = ref.dbi(ref.rows_of(x), cl.assignment, "cosine")
    assert got == pytest.approx(want, rel=1e-9)
    # centroid cosine distance is ~2, so DBI ~ (sigma_a + sigma_b) / 2
    ca = x[:20].mean(0) / np.linalg.norm(x[:20].mean(0))
    cb = x[20:].mean(0) / np.linalg.norm(x[20:].mean(0))
    assert 1 - ca @ cb == pytest.approx(2.0, abs=1e-3)
    mean_sigma = (np.mean(1 - x[:20] @ ca) + np.mean(1 - x[20:] @ cb)) / 2
    assert got == pytest.approx(mean_sigma, rel=1e-3)


def test_dbi_permutation_invariant():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((90, 4))
    cl = kmeans(x, 5, seed=1)
    perm = np.array([3, 0, 4, 1, 2])
    relabelled = _clustering(perm[cl.assignment])
    assert compute_dbi(x, relabelled, "euclidean") == pytest.approx(compute_dbi(x, cl, "euclidean"), rel=1e-12)


def test_dbi_errors():
    x = np.array([[0.0], [1.0], [1.0]])
    with pytest.raises(ValueError, match="at least 2"):
        compute_dbi(x, _clustering([0, 0, 0]), "euclidean")
    with pytest.raises(ValueError, match="clusters 0 and 1"):
        compute_dbi(np.array([[0.0], [1.0], [0.5], [0.5]]), _clustering([0, 0, 1, 1]), "euclidean")
    with pytest.raises(ValueError, match="spherical"):
        compute_dbi(x, _clustering([0, 1, 1]), "cosine")


# -- CV ------------------------------------------------------------------------


def test_cv_unit_norm_is_zero():
    x = np.eye(4)
    assert compute_cv(x) == 0.0


def test_cv_hand_value():
    assert compute_cv(np.array([[1.0, 0.0], [0.0, 3.0]])) == pytest.approx(0.5, rel=1e-15)


def test_cv_all_zero_errors():
    with pytest.raises(ValueError, match="zero"):
        compute_cv(np.zeros((3, 2)))


# -- RA ------------------------------------------------------------------------


def test_ra_identical_rows():
    x = np.tile([0.3, -1.2, 2.0], (5, 1))
    # the epsilon in the denominator biases the cosine just below 1
    assert compute_ra(x) == pytest.approx(0.0, abs=1e-3)


def test_ra_hand_value():
    assert compute_ra(np.array([[1.0, 0.0], [0.0, 1.0]])) == pytest.approx(45.0, abs=1e-9)


def test_ra_zero_row_contributes_ninety():
    x = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 0.0]])
    assert compute_ra(x) == pytest.approx((0 + 0 + 90) / 3, abs=1e-3)


# -- RC ------------------------------------------------------------------------


def test_rc_collinear_hand_value():
    x = np.array([[0.0], [1.0], [2.0]])
    assert compute_rc(x, RcConfig(anchor_count=3, mean_sample_count=2)) == pytest.approx(4 / 3, rel=1e-15)


def test_rc_regular_simplex_is_one():
    assert compute_rc(np.eye(5)) == pytest.approx(1.0, rel=1e-12)


def test_rc_skips_duplicates():
    x = np.array([[0.0], [0.0], [1.0], [3.0]])
    # anchors 0 and 1 are duplicates; 2: nn 1 at distance 1, mean (1+1+2)/3; 3: nn 2, mean (3+3+2)/3
    want = ((4 / 3) / 1 + (8 / 3) / 2) / 2
    assert compute_rc(x) == pytest.approx(want, rel=1e-12)


def test_rc_all_duplicates_errors():
    with pytest.raises(ValueError, match="duplicate"):
        compute_rc(np.zeros((4, 2)))


def test_rc_needs_three_points():
    with pytest.raises(ValueError, match="n >= 3"):
        compute_rc(np.eye(2))


def test_rc_sampling_is_seeded():
    rng = np.random.default_rng(5)
    x = rng.standard_normal((300, 6))
    cfg = RcConfig(anchor_count=50, mean_sample_count=40, seed=7)
    assert compute_rc(x, cfg) == compute_rc(x, cfg)
    assert compute_rc(x, cfg) != compute_rc(x, RcConfig(anchor_count=50, mean_sample_count=40, seed=8))


def test_rc_cosine_distance_option():
    rng = np.random.default_rng(2)
    x = rng.standard_normal((40, 3))
    got = compute_rc(x, RcConfig(distance="cosine"))
    xs = [r / np.linalg.norm(r) for r in x]
    ratios = []
    for i, a in enumerate(xs):
        d = [1 - float(a @ b) for j, b in enumerate(xs) if j != i]
        ratios.append(np.mean(d) / min(d))
    assert got == pytest.approx(np.mean(ratios), rel=1e-9)


# -- invariants ------------------------------------------------------------------


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31), n=st.integers(5, 60), d=st.integers(2, 8))
def test_brute_force_agreement(seed, n, d):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, d)) * rng.lognormal(0, 0.5, size=(n, 1)) + 0.3
    rows = ref.rows_of(x)
    assert compute_cv(x) == pytest.approx(ref.cv(rows), rel=1e-6)
    assert compute_ra(x) == pytest.approx(ref.ra_degrees(rows), rel=1e-6)
    assert compute_rc(x) == pytest.approx(ref.rc_full(rows), rel=1e-6)
    k = min(4, n - 1)
    eu = kmeans(x, k, Variant.EUCLIDEAN, seed=seed)
    sp = kmeans(x, k, Variant.SPHERICAL, seed=seed)
    if len(np.unique(eu.assignment)) >= 2:
        assert compute_dbi(x, eu, "euclidean") == pytest.approx(ref.dbi(rows, eu.assignment, "euclidean"), rel=1e-6)
    if len(np.unique(sp.assignment)) >= 2:
        assert compute_dbi(x, sp, "cosine") == pytest.approx(ref.dbi(rows, sp.assignment, "cosine"), rel=1e-6)


@pytest.mark.parametrize("alpha", [0.1, 10.0, 3.7])
def test_scale_invariance(alpha):
    rng = np.random.default_rng(8)
    x = rng.standard_normal((200, 10)) * rng.lognormal(0, 0.4, size=(200, 1))
    cfg = RcConfig(anchor_count=80, mean_sample_count=60, seed=1)
    assert compute_cv(alpha * x) == pytest.approx(compute_cv(x), rel=1e-6)
    assert compute_ra(alpha * x) == pytest.approx(compute_ra(x), abs=1e-4)
    assert compute_rc(alpha * x, cfg) == pytest.approx(compute_rc(x, cfg), rel=1e-6)


def test_ra_rotation_invariant():
    rng = np.random.default_rng(4)
    x = rng.standard_normal((150, 6)) + 1.0
    q, _ = np.linalg.qr(rng.standard_normal((6, 6)))
    assert compute_ra(x @ q) == pytest.approx(compute_ra(x), abs=1e-4)


# -- profile ---------------------------------------------------------------------


def test_default_k():
    assert default_k(10000) == 100
    assert default_k(3) == 2
    assert default_k(10**9) == 4096


def test_profile_unit_norm_synth_has_low_cv():
    data = generate(SynthConfig(n=1500, d=16, k_classes=6, spread=0.2, norm_log_sigma=0.0, query_count=1, seed=12))
    assert profile(data.dataset, seed=0).cv < 0.02


def test_profile_deterministic():
    data = generate(SynthConfig(n=600, d=8, k_classes=4, spread=0.3, norm_log_sigma=0.3, query_count=1, seed=1))
    a = profile(data.dataset, seed=5)
    b = profile(data.dataset, seed=5)
    assert a == b and a.provenance == b.provenance


def test_profile_composes_scalar_ops():
    ds = VectorDataset([[1.0, 0.1], [1.1, 0.0], [-0.1, 1.0], [0.0, 1.2]])
    p = profile(ds, k=2, seed=0)
    eu = kmeans(ds, 2, Variant.EUCLIDEAN, seed=0)
    sp = kmeans(ds, 2, Variant.SPHERICAL, seed=0)
    assert p.dbi_e == compute_dbi(ds, eu, "euclidean")
    assert p.dbi_c == compute_dbi(ds, sp, "cosine")
    assert p.cv == compute_cv(ds)
    assert p.ra_deg == compute_ra(ds)
    assert p.rc == compute_rc(ds, RcConfig(seed=0))
    assert p.provenance["k"] == 2


def test_profile_invariants_checked():
    with pytest.raises(ValueError):
        MetaFeatureProfile(1.0, 1.0, -0.1, 10.0, 2.0)
    with pytest.raises(ValueError):
        MetaFeatureProfile(1.0, 1.0, 0.1, 190.0, 2.0)
    with pytest.raises(ValueError):
        MetaFeatureProfile(1.0, math.nan, 0.1, 10.0, 2.0)


def test_documented_values_lie_in_profile_ranges():
    # reference values for three benchmark datasets must be valid profiles
    MetaFeatureProfile(dbi_e=3.04, dbi_c=1.61, cv=0.02, ra_deg=83, rc=1.98)
    MetaFeatureProfile(dbi_e=4.27, dbi_c=2.26, cv=0.04, ra_deg=91, rc=142)
    MetaFeatureProfile(dbi_e=4.5, dbi_c=9.7, cv=0.13, ra_deg=44, rc=75)
