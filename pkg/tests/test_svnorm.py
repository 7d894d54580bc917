"""Schatten-von Neumann calculus on 2-frame tangent maps: frozen
spectral oracles, an angular-sweep operator-norm oracle, finite
difference first variation, and the two randomized suites at reduced
trial counts (the full 10^4-trial runs live in the acceptance gate)."""

import numpy as np
import pytest

import stretchlab.minkowski as mk
import stretchlab.svnorm as sv
from stretchlab.errors import InvariantViolation

hypothesis = pytest.importorskip("hypothesis")
from hypothesis import given, strategies as st

ORIGIN = np.array([0.0, 0.0, 1.0])


def diag_map(a, b):
    """Tangent map at (0,0,1) with #-orthonormal frame: singular
    values are |a|, |b| by construction."""
    cols = np.array([[a, 0.0, 0.0], [0.0, b, 0.0]])
    return sv.TangentMap.make(ORIGIN, cols)


def random_map(rng, n=1):
    X = mk.random_point(rng, size=(n,))
    cols = np.stack([mk.random_tangent(rng, X), mk.random_tangent(rng, X)],
                    axis=-2)
    return sv.TangentMap.make(X, cols)


# ---------------------------------------------------------------------------
# frozen spectral values
# ---------------------------------------------------------------------------

def test_sv_norm_frozen_17_quarter():
    """cols (2,0,0), (0,1,0): sigma = (2,1), |A|_4 = (2^4 + 1)^{1/4}."""
    A = diag_map(2.0, 1.0)
    np.testing.assert_allclose(sv.singular_values(A), [2.0, 1.0], atol=1e-14)
    assert abs(sv.sv_norm(A, 4.0) - 17.0 ** 0.25) < 1e-14
    assert abs(sv.sv_norm(A, np.inf) - 2.0) < 1e-14
    assert abs(sv.sv_norm(A, 1.0) - 3.0) < 1e-14


def test_gram_frozen():
    A = diag_map(2.0, 1.0)
    np.testing.assert_allclose(sv.gram(A), [[4.0, 0.0], [0.0, 1.0]], atol=1e-14)


def test_s_q_cubes_singular_values():
    """S_3 maps sigma = (2, 1) to (8, 1) and keeps the frame."""
    A = diag_map(2.0, 1.0)
    S3 = sv.s_q(A, 3.0)
    np.testing.assert_allclose(sv.singular_values(S3), [8.0, 1.0], atol=1e-12)
    np.testing.assert_allclose(S3.cols[0], [8.0, 0.0, 0.0], atol=1e-12)
    np.testing.assert_allclose(S3.cols[1], [0.0, 1.0, 0.0], atol=1e-12)


def test_s_q_identity_and_validation():
    A = diag_map(1.5, 0.5)
    assert sv.s_q(A, 1.0) is A
    with pytest.raises(InvariantViolation):
        sv.s_q(A, 0.5)
    with pytest.raises(InvariantViolation):
        sv.sv_norm(A, 0.5)


def test_trace_power_frozen():
    A = diag_map(2.0, 1.0)
    assert abs(sv.trace_power(A, 4.0) - 17.0) < 1e-12


# ---------------------------------------------------------------------------
# independent spectral oracles
# ---------------------------------------------------------------------------

def test_singular_values_vs_eigh(rng):
    """Hand-rolled 2x2 eigensolver against numpy.linalg.eigh on the
    Gram matrices of random tangent maps."""
    A = random_map(rng, n=400)
    lam = np.linalg.eigvalsh(sv.gram(A))          # ascending
    want = np.sqrt(np.maximum(lam[..., ::-1], 0.0))
    np.testing.assert_allclose(sv.singular_values(A), want,
                               rtol=1e-9, atol=1e-9)


def test_operator_norm_angular_sweep(rng):
    """s1 = max over unit domain directions w of |A w|: a 721-angle
    sweep brackets the top singular value."""
    A = random_map(rng, n=20)
    th = np.linspace(0.0, np.pi, 721)
    w = np.stack([np.cos(th), np.sin(th)], axis=-1)           # (721, 2)
    v = np.einsum("ka,nad->nkd", w, A.cols)                   # (n, 721, 3)
    nrm = np.sqrt(np.maximum(mk.mink_inner(v, v), 0.0))
    grid_max = nrm.max(axis=-1)
    s1 = sv.singular_values(A)[..., 0]
    dth = th[1] - th[0]
    assert np.all(grid_max <= s1 * (1.0 + 1e-12) + 1e-12)
    assert np.all(s1 * np.cos(0.5 * dth) <= grid_max + 1e-12)


def test_first_variation_kernel_fd(rng):
    """p (S_{p-1}(A); C)# matches the central difference of
    Tr Q(A + tC)^p."""
    for p in (4.0, 8.0):
        A = random_map(rng, n=50)
        C = sv.TangentMap(base=A.base,
                          cols=mk.tangent_project(A.base[..., None, :],
                                                  rng.normal(size=A.cols.shape)))
        t = 1e-6
        plus = sv.trace_power(sv.TangentMap(A.base, A.cols + t * C.cols), p)
        minus = sv.trace_power(sv.TangentMap(A.base, A.cols - t * C.cols), p)
        fd = (plus - minus) / (2.0 * t)
        got = sv.first_variation_kernel(A, C, p)
        scale = np.maximum(1.0, np.abs(fd))
        np.testing.assert_allclose(got / scale, fd / scale, atol=5e-8)


# ---------------------------------------------------------------------------
# norm axioms (property tests)
# ---------------------------------------------------------------------------

scales = st.floats(-3.0, 3.0, allow_nan=False)
entries = st.floats(-2.0, 2.0, allow_nan=False)
exponents = st.sampled_from([2.0, 3.0, 4.0, 6.0, 10.0])


@given(a=entries, b=entries, c=scales, p=exponents)
def test_homogeneity(a, b, c, p):
    A = diag_map(a, b)
    cA = sv.TangentMap(A.base, c * A.cols)
    np.testing.assert_allclose(sv.sv_norm(cA, p), abs(c) * sv.sv_norm(A, p),
                               atol=1e-10)


@given(a=entries, b=entries, c=entries, d=entries, p=exponents)
def test_triangle_same_base(a, b, c, d, p):
    A, B = diag_map(a, b), diag_map(c, d)
    AB = sv.TangentMap(A.base, A.cols + B.cols)
    assert sv.sv_norm(AB, p) <= sv.sv_norm(A, p) + sv.sv_norm(B, p) + 1e-10


@given(a=entries, b=entries)
def test_p_interval_monotone(a, b):
    A = diag_map(a, b)
    norms = [sv.sv_norm(A, p) for p in (1.0, 2.0, 4.0, 8.0, np.inf)]
    assert all(x >= y - 1e-12 for x, y in zip(norms, norms[1:]))


def test_frob_matches_two_norm(rng):
    A = random_map(rng, n=100)
    np.testing.assert_allclose(sv.frob_norm(A), sv.sv_norm(A, 2.0),
                               rtol=1e-10, atol=1e-12)


def test_tangent_map_make_projects_and_validates(rng):
    X = mk.random_point(rng, size=())
    w = rng.normal(size=(2, 3))          # not tangent at X: gets projected
    A = sv.TangentMap.make(X, w)
    np.testing.assert_allclose(mk.mink_inner(A.cols, X), 0.0, atol=1e-12)
    with pytest.raises(InvariantViolation):
        sv.TangentMap.make(np.array([0.0, 0.0, 2.0]), w)


# ---------------------------------------------------------------------------
# randomized suites (reduced trial counts)
# ---------------------------------------------------------------------------

def test_norm_property_suite_small():
    rep = sv.check_norm_properties(trials=2000, seed=0)
    assert rep.all_pass(asserted_only=False), {
        k: v.worst_margin for k, v in rep.results.items() if not v.passed}
    assert set(rep.results) == {
        "holder_product", "holder_trace", "triangle", "norm_equivalence",
        "subgradient", "p_monotone", "p_limit"}
    for r in rep.results.values():
        assert r.trials == 2000
        assert np.isfinite(r.worst_margin)


def test_pointwise_suite_small():
    rep = sv.check_pointwise_suite(trials=2000, seed=0)
    assert rep.all_pass(asserted_only=True), {
        k: v.worst_margin for k, v in rep.results.items()
        if v.asserted and not v.passed}
    # the mixed-difference ratio is tabulated, not asserted: its
    # constant is an open question, so failures there are data
    assert "mixed_difference_ratio" in rep.results
    assert not rep.results["mixed_difference_ratio"].asserted


def test_suite_report_serializes():
    rep = sv.check_norm_properties(trials=200, seed=3)
    doc = rep.to_dict()
    assert doc["trials"] == 200
    for rec in doc["inequalities"].values():
        assert set(rec) >= {"pass", "asserted", "worst_margin", "trials"}


def test_suites_deterministic():
    a = sv.check_pointwise_suite(trials=500, seed=7).to_dict()
    b = sv.check_pointwise_suite(trials=500, seed=7).to_dict()
    assert a == b
