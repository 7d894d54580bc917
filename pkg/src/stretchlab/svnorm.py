"""Schatten-von Neumann calculus for 2-frame tangent maps.

A tangent map A at X in H is stored as the images (A_1, A_2) of an
orthonormal frame of the 2-dimensional domain; its Gram matrix

    G_{ab} = (A_a, A_b)#

is positive semidefinite because T_X H is spacelike.  With Q = G^{1/2}
(acting on the domain) the singular values s_1 >= s_2 >= 0 are the
eigenvalues of Q and

    |A|_{sv^p} = (s_1^p + s_2^p)^{1/p},        |A|_{sv^inf} = s_1,
    S_q(A)     = A Q^{q-1}   (spectral action: s_i -> s_i^q),
    (A; B)#    = sum_a (A_a, B_a)#.

The first variation of j_p(A) = Tr Q(A)^p is p (S_{p-1}(A); C)#, and
j_p is convex, which yields the subgradient test implemented below.

The pointwise-inequality suite bundles the scalar and matrix
inequalities that control differences S_q(A) - S_q(B) at one base
point and the drift incurred when a map based at Y is #-projected to
a nearby base point X (chordal gap delta(X,Y) < 1/10).  Each check
returns a signed margin, normalised by the natural homogeneous scale
of the inequality, so "pass" means margin >= -1e-12.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import minkowski as mk
from .errors import InvariantViolation

# Relative slack for strict inequalities (floating point cannot
# certify strictness; equality cases are legitimate limits).
SLACK = 1e-12

# Standing smallness assumption for the cross-basepoint inequalities.
DELTA_MAX = 0.1


@dataclass(frozen=True)
class TangentMap:
    """Tangent 2-frame map at a base point on the hyperboloid.

    cols[..., a, :] is the image of the a-th orthonormal domain frame
    vector; every column is #-orthogonal to base.  Use ``make`` to
    construct from raw data (projects the columns).
    """

    base: np.ndarray   # (..., 3)
    cols: np.ndarray   # (..., 2, 3)

    @classmethod
    def make(cls, base, cols, tol=mk.TOL_H):
        base = np.asarray(base, dtype=float)
        cols = np.asarray(cols, dtype=float)
        mk.check_on_hyperboloid(base, tol=tol, what="TangentMap base")
        cols = mk.tangent_project(base[..., None, :], cols)
        return cls(base=base, cols=cols)

    def project_to(self, X):
        """#-project the columns into T_X H (base-point transplant)."""
        X = np.asarray(X, dtype=float)
        return TangentMap(base=X, cols=mk.tangent_project(X[..., None, :], self.cols))


def sym2_eig(G):
    """Closed-form eigendecomposition of symmetric 2x2 stacks.

    Returns (lam, V) with lam[..., 0] >= lam[..., 1] (clipped at 0 for
    Gram input) and V[..., :, k] the k-th eigenvector.  When the gap
    lam1 - lam2 is below 1e-12 * lam1 the eigenbasis is ill-posed and
    the identity basis is returned; every spectral function used here
    is direction-independent in that regime.
    """
    G = np.asarray(G)
    a, b, c = G[..., 0, 0], G[..., 1, 1], G[..., 0, 1]
    tr = a + b
    disc = np.sqrt(np.maximum((a - b) ** 2 + 4.0 * c * c, 0.0))
    lam1 = np.maximum(0.5 * (tr + disc), 0.0)
    lam2 = np.maximum(0.5 * (tr - disc), 0.0)

    # Eigenvector for lam1: take the better-conditioned of the two
    # algebraic expressions, then rotate to get its partner.
    v_a = np.stack([c, lam1 - a], axis=-1)
    v_b = np.stack([lam1 - b, c], axis=-1)
    n_a = np.sum(v_a * v_a, axis=-1)
    n_b = np.sum(v_b * v_b, axis=-1)
    v = np.where((n_b > n_a)[..., None], v_b, v_a)
    n = np.sqrt(np.maximum(n_a, n_b))
    degenerate = disc <= 1e-12 * np.maximum(lam1, 0.0)
    safe = np.where(degenerate | (n == 0.0), 1.0, n)
    v = np.where((degenerate | (n == 0.0))[..., None],
                 np.broadcast_to(np.array([1.0, 0.0]), v.shape), v / safe[..., None])
    V = np.stack([v, np.stack([-v[..., 1], v[..., 0]], axis=-1)], axis=-1)
    lam = np.stack([lam1, lam2], axis=-1)
    return lam, V


def sym2_apply(G, w):
    """Reassemble V diag(w) V^T for weights w computed from sym2_eig."""
    _, V = sym2_eig(G)
    return np.einsum("...k,...ik,...jk->...ij", w, V, V)


def gram(A: TangentMap):
    """G_{ab} = (A_a, A_b)#, a positive semidefinite 2x2 stack."""
    return mk.mink_inner(A.cols[..., :, None, :], A.cols[..., None, :, :])


def singular_values(A: TangentMap):
    """(s1, s2) with s1 >= s2 >= 0, stacked on the last axis."""
    lam, _ = sym2_eig(gram(A))
    return np.sqrt(lam)


def sv_norm(A, p):
    """(s1^p + s2^p)^{1/p}; p = inf gives the operator norm s1.

    Accepts a TangentMap or a (..., 2) stack of singular values.
    Factored as s1 (1 + (s2/s1)^p)^{1/p} so large p cannot overflow.
    """
    s = singular_values(A) if isinstance(A, TangentMap) else np.asarray(A)
    s1, s2 = s[..., 0], s[..., 1]
    if np.isinf(p):
        return s1
    if p < 1:
        raise InvariantViolation(f"sv_norm: p = {p} < 1 is not a norm exponent")
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(s1 > 0.0, s2 / np.where(s1 > 0.0, s1, 1.0), 0.0)
    return s1 * (1.0 + r ** p) ** (1.0 / p)


def trace_power(A, p):
    """Tr Q(A)^p = s1^p + s2^p."""
    s = singular_values(A) if isinstance(A, TangentMap) else np.asarray(A)
    return s[..., 0] ** p + s[..., 1] ** p


def s_q(A: TangentMap, q):
    """Spectral power map S_q(A) = A Q(A)^{q-1}: s_i -> s_i^q.

    q = 1 returns A itself.  Zero singular values with q < 2 use the
    convention 0^{q-1} = 0 (continuity of s -> s^q at 0 for q > 1).
    """
    if q < 1:
        raise InvariantViolation(f"S_q: q = {q} < 1 not supported")
    if q == 1:
        return A
    lam, V = sym2_eig(gram(A))
    s = np.sqrt(lam)
    w = np.where(s > 0.0, s ** (q - 1.0), 0.0)
    M = np.einsum("...k,...ik,...jk->...ij", w, V, V)
    # Columns transform by M acting on the domain: S_q(A)_a = sum_b M_{ab} A_b.
    cols = np.einsum("...ab,...bj->...aj", M, A.cols)
    return TangentMap(base=A.base, cols=cols)


def pair_sharp(A, B):
    """(A; B)# = sum_a (A_a, B_a)#.

    Works on TangentMaps or raw (..., 2, 3) column stacks; base points
    are not checked (cross-basepoint pairings are meaningful in the
    projection estimates and are the caller's responsibility).
    """
    ca = A.cols if isinstance(A, TangentMap) else np.asarray(A)
    cb = B.cols if isinstance(B, TangentMap) else np.asarray(B)
    return np.sum(mk.mink_inner(ca, cb), axis=-1)


def frob_norm(A, B=None):
    """|A - B|_2 = sqrt((A-B; A-B)#) for maps at a common base point."""
    ca = A.cols if isinstance(A, TangentMap) else np.asarray(A)
    if B is not None:
        cb = B.cols if isinstance(B, TangentMap) else np.asarray(B)
        ca = ca - cb
    return np.sqrt(np.maximum(np.sum(mk.mink_inner(ca, ca), axis=-1), 0.0))


def first_variation_kernel(A: TangentMap, C: TangentMap, p):
    """p (S_{p-1}(A); C)# = d/dt Tr Q(A + t C)^p at t = 0."""
    return p * pair_sharp(s_q(A, p - 1.0), C)


def check_convexity_subgradient(A: TangentMap, B: TangentMap, p, slack=SLACK):
    """Subgradient inequality of the convex functional Tr Q(.)^p:

        p (S_{p-1}(A); B - A)# <= |B|_{sv^p}^p - |A|_{sv^p}^p.

    Returns a boolean (stack); slack is relative with an absolute
    floor of 1.
    """
    lhs = p * (pair_sharp(s_q(A, p - 1.0), B) - trace_power(A, p))
    rhs = trace_power(B, p) - trace_power(A, p)
    scale = np.maximum(1.0, np.maximum(trace_power(A, p), trace_power(B, p)))
    return lhs <= rhs + slack * scale


def product_sharp(A, B):
    """2x2 matrix of the composition A^# B: entries M_{ab} = (A_a, B_b)#.

    For maps with a common base point this is the coordinate matrix of
    B followed by the #-adjoint of A, the object whose Schatten norms
    obey the Hoelder product bound |A^# B|_{sv^r} <= |A|_p |B|_q.
    """
    ca = A.cols if isinstance(A, TangentMap) else np.asarray(A)
    cb = B.cols if isinstance(B, TangentMap) else np.asarray(B)
    return mk.mink_inner(ca[..., :, None, :], cb[..., None, :, :])


def sv_norm_2x2(M, r):
    """Schatten r-norm of a plain 2x2 matrix stack (Euclidean SVD)."""
    G = np.einsum("...ka,...kb->...ab", M, M)
    lam, _ = sym2_eig(G)
    return sv_norm(np.sqrt(lam), r)


def check_norm_properties(trials=10_000, p_list=(4.0, 6.0, 10.0), seed=0, rng=None):
    """Random sweep over the basic Schatten-norm properties:

      holder_product     |A^# B|_{sv^r} <= |A|_p |B|_q, 1/r = 1/p + 1/q
      holder_trace       |(A; B)#| <= |A|_p |B|_q, conjugate exponents
      p_monotone         |A|_1 >= |A|_p >= |A|_q >= |A|_inf for p <= q
      p_limit            s1 <= |A|_p <= 2^{1/p} s1, decreasing along
                         doubled exponents
      triangle           |A + B|_p <= |A|_p + |B|_p
      norm_equivalence   (1/sqrt 2) |A|_2 <= |A|_p <= |A|_2
      subgradient        p (S_{p-1}(A); B - A)# <= |B|_p^p - |A|_p^p

    Margins are normalised by max(1, rhs scale); returns a SuiteReport.
    """
    if rng is None:
        rng = np.random.default_rng(seed)
    results: dict = {}
    batch = 2000
    done = 0
    p_sorted = sorted(float(p) for p in p_list)
    while done < trials:
        n = min(batch, trials - done)
        done += n
        X, A, B = _sample_same_base(rng, n)

        def inst(i):
            return {"X": _round_list(X[i]), "A": _round_list(A.cols[i]),
                    "B": _round_list(B.cols[i])}

        M = product_sharp(A, B)
        for p in p_sorted:
            q_conj = p / (p - 1.0)
            for q, r in ((p, p / 2.0), (q_conj, 1.0), (np.inf, p)):
                lhs = sv_norm_2x2(M, r)
                rhs = sv_norm(A, p) * sv_norm(B, q)
                _record(results, "holder_product", (rhs - lhs) / np.maximum(1.0, rhs),
                        inst, trials=done)

            lhs = np.abs(pair_sharp(A, B))
            rhs = sv_norm(A, p) * sv_norm(B, q_conj)
            _record(results, "holder_trace", (rhs - lhs) / np.maximum(1.0, rhs),
                    inst, trials=done)

            AB = TangentMap(base=A.base, cols=A.cols + B.cols)
            lhs = sv_norm(AB, p)
            rhs = sv_norm(A, p) + sv_norm(B, p)
            _record(results, "triangle", (rhs - lhs) / np.maximum(1.0, rhs),
                    inst, trials=done)

            n2, npp = sv_norm(A, 2.0), sv_norm(A, p)
            m = np.minimum(n2 - npp, npp - n2 / np.sqrt(2.0)) / np.maximum(1.0, n2)
            _record(results, "norm_equivalence", m, inst, trials=done)

            lhs = p * (pair_sharp(s_q(A, p - 1.0), B) - trace_power(A, p))
            rhs = trace_power(B, p) - trace_power(A, p)
            scale = np.maximum(1.0, np.maximum(trace_power(A, p), trace_power(B, p)))
            _record(results, "subgradient", (rhs - lhs) / scale, inst, trials=done)

        # (iii): 1 >= ... chain across the whole p-list plus endpoints.
        chain = [sv_norm(A, 1.0)] + [sv_norm(A, p) for p in p_sorted] \
            + [sv_norm(A, np.inf)]
        scale = np.maximum(1.0, chain[0])
        m = np.min([(a - b) / scale for a, b in zip(chain, chain[1:])], axis=0)
        _record(results, "p_monotone", m, inst, trials=done)

        # (iv): cap s1 <= |A|_p <= 2^{1/p} s1 and decrease along doubling.
        s1 = singular_values(A)[..., 0]
        scale = np.maximum(1.0, s1)
        prev = None
        m = np.inf
        for p in (64.0, 256.0, 1024.0):
            npp = sv_norm(A, p)
            m = np.minimum(m, np.minimum(npp - s1, 2.0 ** (1.0 / p) * s1 - npp) / scale)
            if prev is not None:
                m = np.minimum(m, (prev - npp) / scale)
            prev = npp
        _record(results, "p_limit", m, inst, trials=done)

    return SuiteReport(results=results, p_list=tuple(p_sorted), trials=trials,
                       seed=seed)


def norm_equivalence_check(A: TangentMap, p, slack=SLACK):
    """Pointwise sandwich (1/sqrt 2) |A|_2 <= |A|_{sv^p} <= |A|_2, p >= 2."""
    if p < 2:
        raise InvariantViolation("norm_equivalence_check: stated for p >= 2")
    n2 = sv_norm(A, 2.0)
    npp = sv_norm(A, p)
    tol = slack * np.maximum(1.0, n2)
    return (npp <= n2 + tol) & (n2 / np.sqrt(2.0) <= npp + tol)


# ---------------------------------------------------------------------------
# Pointwise inequality suite
# ---------------------------------------------------------------------------

@dataclass
class InequalityResult:
    name: str
    passed: bool
    asserted: bool
    worst_margin: float
    argmin_instance: dict
    trials: int

    def to_dict(self):
        return {
            "pass": bool(self.passed),
            "asserted": bool(self.asserted),
            "worst_margin": float(self.worst_margin),
            "argmin_instance": self.argmin_instance,
            "trials": int(self.trials),
        }


@dataclass
class SuiteReport:
    results: dict = field(default_factory=dict)
    p_list: tuple = ()
    trials: int = 0
    seed: Optional[int] = None

    def all_pass(self, asserted_only=True):
        return all(r.passed for r in self.results.values()
                   if r.asserted or not asserted_only)

    def to_dict(self):
        return {
            "p_list": list(self.p_list),
            "trials": self.trials,
            "seed": self.seed,
            "inequalities": {k: v.to_dict() for k, v in self.results.items()},
        }


def _round_list(x, nd=12):
    return np.round(np.asarray(x), nd).tolist()


def ineq_scalar_power_mean(x, y, p, sign=1.0):
    """Margin of (x^{p/2} +- y^{p/2})^2 <= p (x^{p-1} +- y^{p-1})(x +- y),
    normalised by max(x, y)^p.  x, y >= 0."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    lhs = (x ** (p / 2.0) + sign * y ** (p / 2.0)) ** 2
    rhs = p * (x ** (p - 1.0) + sign * y ** (p - 1.0)) * (x + sign * y)
    scale = np.maximum(np.maximum(x, y), 1e-300) ** p
    return (rhs - lhs) / scale


def ineq_scalar_reverse_power(x, y, z, p, sign=1.0):
    """Margin of (x^{p-1} +- y^{p-1})^2 <= 4 z^{p-2} (x^{p/2} +- y^{p/2})^2
    for z >= max(x, y), normalised by z^{2(p-1)}."""
    x, y, z = np.asarray(x, float), np.asarray(y, float), np.asarray(z, float)
    lhs = (x ** (p - 1.0) + sign * y ** (p - 1.0)) ** 2
    rhs = 4.0 * z ** (p - 2.0) * (x ** (p / 2.0) + sign * y ** (p / 2.0)) ** 2
    scale = np.maximum(z, 1e-300) ** (2.0 * (p - 1.0))
    return (rhs - lhs) / scale


def ineq_same_base_contraction(A: TangentMap, B: TangentMap, p):
    """Margin of |S_{p/2}(A) - S_{p/2}(B)|^2 <=
    p (S_{p-1}(A) - S_{p-1}(B); A - B)# at one base point."""
    dh = frob_norm(s_q(A, p / 2.0), s_q(B, p / 2.0))
    inner = pair_sharp(s_q(A, p - 1.0), A.cols - B.cols) \
        - pair_sharp(s_q(B, p - 1.0), A.cols - B.cols)
    smax = np.maximum(singular_values(A)[..., 0], singular_values(B)[..., 0])
    scale = np.maximum(smax, 1e-300) ** p
    return (p * inner - dh ** 2) / scale


def ineq_reverse_contraction(A: TangentMap, B: TangentMap, p):
    """Margin of |S_{p-1}(A) - S_{p-1}(B)|^2 <=
    4 max(s(A), s(B))^{p-2} |S_{p/2}(A) - S_{p/2}(B)|^2."""
    d1 = frob_norm(s_q(A, p - 1.0), s_q(B, p - 1.0))
    dh = frob_norm(s_q(A, p / 2.0), s_q(B, p / 2.0))
    smax = np.maximum(singular_values(A)[..., 0], singular_values(B)[..., 0])
    rhs = 4.0 * smax ** (p - 2.0) * dh ** 2
    scale = np.maximum(smax, 1e-300) ** (2.0 * (p - 1.0))
    return (rhs - d1 ** 2) / scale


def _projection_data(X, Btil: TangentMap):
    """Shared quantities for the cross-basepoint estimates.

    Btil lives at Y; B = Btil #-projected to X satisfies
    G(B) = G(Btil) + c c^T with c_a = (Btil_a, X)#.
    """
    B = Btil.project_to(X)
    c = mk.mink_inner(Btil.cols, np.asarray(X)[..., None, :])
    return B, c


def ineq_cross_term_bound(X, Y, Btil: TangentMap, p):
    """Margin of 0 <= ((S_{p-1}(Btil), X)#; (Btil, X)#) <=
    Tr Q(Btil)^p delta (1 + delta/4)."""
    d = mk.delta(X, Y)
    Sp = s_q(Btil, p - 1.0)
    cS = mk.mink_inner(Sp.cols, np.asarray(X)[..., None, :])
    cB = mk.mink_inner(Btil.cols, np.asarray(X)[..., None, :])
    val = np.sum(cS * cB, axis=-1)
    cap = trace_power(Btil, p) * d * (1.0 + 0.25 * d)
    scale = np.maximum(trace_power(Btil, p) * d, 1e-300)
    return np.minimum(val, cap - val) / scale


def ineq_projection_eigenvalue_shift(X, Y, Btil: TangentMap, p):
    """Projection to a nearby base point grows the Gram spectrum in the
    sorted sense, and the q-th power shift is O(delta):

        lam_i(G(B)^q) >= lam_i(G(Btil)^q),
        lam_max(G(B)^q - G(Btil)^q) <= 2 q s(B)^{2q} delta,

    with q = (p-2)/2.  Margin is the minimum of both, each normalised
    by s(B)^{2q} (times delta for the second)."""
    q = (p - 2.0) / 2.0
    d = mk.delta(X, Y)
    B, _ = _projection_data(X, Btil)
    lamB, VB = sym2_eig(gram(B))
    lamT, VT = sym2_eig(gram(Btil))
    GBq = np.einsum("...k,...ik,...jk->...ij", lamB ** q, VB, VB)
    GTq = np.einsum("...k,...ik,...jk->...ij", lamT ** q, VT, VT)
    lamD, _ = sym2_eig_sym(GBq - GTq)
    s2q = np.maximum(lamB[..., 0] ** q, 1e-300)
    m_dom = np.min(lamB ** q - lamT ** q, axis=-1) / s2q
    m_cap = (2.0 * q * lamB[..., 0] ** q * d - lamD[..., 0]) / (s2q * np.maximum(d, 1e-300))
    return np.minimum(m_dom, m_cap)


def sym2_eig_sym(M):
    """Eigenvalues of a symmetric (not necessarily PSD) 2x2 stack,
    sorted descending; eigenvectors as in sym2_eig."""
    M = np.asarray(M)
    a, b, c = M[..., 0, 0], M[..., 1, 1], M[..., 0, 1]
    tr = a + b
    disc = np.sqrt(np.maximum((a - b) ** 2 + 4.0 * c * c, 0.0))
    lam = np.stack([0.5 * (tr + disc), 0.5 * (tr - disc)], axis=-1)
    return lam, None


def ineq_transport_pairing_bound(X, Y, Btil: TangentMap, p):
    """Margin of |(S_{p-1}(B) - S_{p-1}(Btil), X - Y)#| <=
    2 (p-1) s(B)^{p-1} delta^{3/2}, Euclidean norm over the frame."""
    d = mk.delta(X, Y)
    B, _ = _projection_data(X, Btil)
    SB = s_q(B, p - 1.0)
    ST = s_q(Btil, p - 1.0)
    comp = mk.mink_inner(SB.cols - ST.cols, (np.asarray(X) - np.asarray(Y))[..., None, :])
    val = np.sqrt(np.sum(comp * comp, axis=-1))
    sB = singular_values(B)[..., 0]
    rhs = 2.0 * (p - 1.0) * sB ** (p - 1.0) * d ** 1.5
    scale = np.maximum(sB ** (p - 1.0) * d ** 1.5, 1e-300)
    return (rhs - val) / scale


def ineq_projected_half_power_drift(X, Y, Btil: TangentMap, p):
    """Margin of |(S_{p/2}(Btil))_X - S_{p/2}(B)| <= p delta s(B)^{p/2}."""
    d = mk.delta(X, Y)
    B, _ = _projection_data(X, Btil)
    Sh_t = s_q(Btil, p / 2.0).project_to(X)
    Sh_b = s_q(B, p / 2.0)
    val = frob_norm(Sh_t, Sh_b)
    sB = singular_values(B)[..., 0]
    rhs = p * d * sB ** (p / 2.0)
    scale = np.maximum(d * sB ** (p / 2.0), 1e-300)
    return (rhs - val) / scale


def ratio_mixed_difference(X, Y, Btil: TangentMap, A: TangentMap, p, C=8.0):
    """Observed/bound ratio for the mixed difference estimate (p >= 4)

        |(S_{p-1}(Btil) - S_{p-1}(B); B - A)#| <=
            2 (p-2) C s(B)^{p-2} delta |S_{p/2}(B) - S_{p/2}(A)|^{4/p},

    reported rather than asserted: C is a combinatorial constant whose
    sharp value is not pinned down; C = 8 is the bookkeeping factor of
    the term count.  Ratio <= 1 means the instance respects the bound.
    """
    d = mk.delta(X, Y)
    B, _ = _projection_data(X, Btil)
    lhs = np.abs(pair_sharp(s_q(Btil, p - 1.0), B.cols - A.cols)
                 - pair_sharp(s_q(B, p - 1.0), B.cols - A.cols))
    sB = singular_values(B)[..., 0]
    dh = frob_norm(s_q(B, p / 2.0), s_q(A, p / 2.0))
    rhs = 2.0 * (p - 2.0) * C * sB ** (p - 2.0) * d * dh ** (4.0 / p)
    return lhs / np.maximum(rhs, 1e-300)


def _sample_scalars(rng, n):
    x = np.abs(rng.normal(size=n)) * 10.0 ** rng.uniform(-1.0, 1.0, size=n)
    y = np.abs(rng.normal(size=n)) * 10.0 ** rng.uniform(-1.0, 1.0, size=n)
    # z >= max(x, y), including the tight case z = max exactly.
    bump = np.where(rng.uniform(size=n) < 0.3, 0.0, rng.uniform(0.0, 1.0, size=n))
    z = np.maximum(x, y) * (1.0 + bump)
    return x, y, z


def _sample_same_base(rng, n):
    X = mk.random_point(rng, radius=1.5, size=n)
    sc = 10.0 ** rng.uniform(-1.0, 0.5, size=(n, 1, 1))
    A = TangentMap.make(X, rng.normal(size=(n, 2, 3)) * sc)
    B = TangentMap.make(X, rng.normal(size=(n, 2, 3)) * sc)
    return X, A, B


def _sample_cross_base(rng, n):
    X = mk.random_point(rng, radius=1.5, size=n)
    d = rng.uniform(1e-4, DELTA_MAX - 1e-4, size=n)
    t = np.arccosh(1.0 + 0.5 * d)
    v = mk.random_tangent(rng, X)
    nv = mk.tangent_norm(v)
    nv = np.where(nv > 0, nv, 1.0)
    Y = mk.exp_map(X, (t / nv)[..., None] * v)
    sc = 10.0 ** rng.uniform(-1.0, 0.5, size=(n, 1, 1))
    Btil = TangentMap.make(Y, rng.normal(size=(n, 2, 3)) * sc)
    A = TangentMap.make(X, rng.normal(size=(n, 2, 3)) * sc)
    return X, Y, Btil, A


def _record(results, name, margins, instance_fn, asserted=True, trials=0):
    margins = np.asarray(margins)
    i = int(np.argmin(margins))
    worst = float(margins.flat[i])
    prev = results.get(name)
    if prev is None or worst < prev.worst_margin:
        results[name] = InequalityResult(
            name=name,
            passed=bool(worst >= -SLACK),
            asserted=asserted,
            worst_margin=worst,
            argmin_instance=instance_fn(i),
            trials=trials,
        )
    else:
        prev.trials = trials
        prev.passed = bool(prev.worst_margin >= -SLACK)


def check_pointwise_suite(trials=10_000, p_list=(4.0, 6.0, 10.0), seed=0, rng=None):
    """Random sweep over the full pointwise-inequality suite.

    Scalar inequalities get (x, y, z) samples across two decades; map
    inequalities get random tangent frames at random base points, the
    cross-basepoint ones with chordal gap delta uniform in
    (1e-4, 0.1).  Returns a SuiteReport keyed by inequality name with
    worst normalised margins and minimal reproduction data.
    """
    if rng is None:
        rng = np.random.default_rng(seed)
    results: dict = {}
    batch = 2000
    done = 0
    while done < trials:
        n = min(batch, trials - done)
        done += n
        x, y, z = _sample_scalars(rng, n)
        Xs, As, Bs = _sample_same_base(rng, n)
        Xc, Yc, Btil, Ac = _sample_cross_base(rng, n)
        for p in p_list:
            m = np.minimum(ineq_scalar_power_mean(x, y, p, +1.0),
                           ineq_scalar_power_mean(x, y, p, -1.0))
            _record(results, "scalar_power_mean", m,
                    lambda i: {"x": x[i], "y": y[i], "p": p}, trials=done)

            m = np.minimum(ineq_scalar_reverse_power(x, y, z, p, +1.0),
                           ineq_scalar_reverse_power(x, y, z, p, -1.0))
            _record(results, "scalar_reverse_power", m,
                    lambda i: {"x": x[i], "y": y[i], "z": z[i], "p": p}, trials=done)

            m = ineq_same_base_contraction(As, Bs, p)
            _record(results, "same_base_contraction", m,
                    lambda i: {"p": p, "X": _round_list(Xs[i]),
                               "A": _round_list(As.cols[i]), "B": _round_list(Bs.cols[i])},
                    trials=done)

            m = ineq_reverse_contraction(As, Bs, p)
            _record(results, "reverse_contraction", m,
                    lambda i: {"p": p, "X": _round_list(Xs[i]),
                               "A": _round_list(As.cols[i]), "B": _round_list(Bs.cols[i])},
                    trials=done)

            def cross_inst(i):
                return {"p": p, "X": _round_list(Xc[i]), "Y": _round_list(Yc[i]),
                        "Btil": _round_list(Btil.cols[i])}

            _record(results, "cross_term_bound",
                    ineq_cross_term_bound(Xc, Yc, Btil, p), cross_inst, trials=done)
            _record(results, "projection_eigenvalue_shift",
                    ineq_projection_eigenvalue_shift(Xc, Yc, Btil, p), cross_inst,
                    trials=done)
            _record(results, "transport_pairing_bound",
                    ineq_transport_pairing_bound(Xc, Yc, Btil, p), cross_inst,
                    trials=done)
            _record(results, "projected_half_power_drift",
                    ineq_projected_half_power_drift(Xc, Yc, Btil, p), cross_inst,
                    trials=done)

            if p >= 4:
                ratio = ratio_mixed_difference(Xc, Yc, Btil, Ac, p)
                # Margin convention: 1 - ratio, so "worst" is the largest ratio.
                _record(results, "mixed_difference_ratio", 1.0 - ratio,
                        lambda i: {"p": p, "X": _round_list(Xc[i]), "Y": _round_list(Yc[i]),
                                   "Btil": _round_list(Btil.cols[i]),
                                   "A": _round_list(Ac.cols[i]),
                                   "ratio": float(ratio[i])},
                        asserted=False, trials=done)

    return SuiteReport(results=results, p_list=tuple(p_list), trials=trials, seed=seed)
