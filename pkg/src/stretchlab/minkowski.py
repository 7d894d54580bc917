"""Minkowski R^{2,1} and hyperboloid-model geometry kernel.

Conventions.  Points and vectors are rows of shape (..., 3) with the
bilinear form

    (X, Y)# = x1 y1 + x2 y2 - x3 y3,

i.e. signature (+, +, -) carried by E_SHARP = diag(1, 1, -1).  The
hyperbolic plane is the upper sheet

    H = { X : (X, X)# = -1,  x3 >= 1 },

whose tangent space at X is T_X H = { v : (v, X)# = 0 }, a spacelike
plane.  Linear maps B get the adjoint B# = E# B^T E# characterised by
(B v, w)# = (v, B# w)#.

The isometry algebra so(2,1) = { A : A# = -A } is generated by the
Minkowski cross product

    X x Y = Y X# - X Y#        (a 3x3 matrix acting as w -> X x Y w),

and splits at a base point X into boosts beta_X(T_X H) and the
rotation stabiliser of X (Cartan decomposition).  The Killing pairing
here is the plain trace form Tr(A B); it is positive on boosts and
negative on the stabiliser, and the bar-twisted form -Tr(O A O B)
with O = I + 2 X X# is positive definite on all of so(2,1).

All kernels broadcast over leading axes and stay dtype-agnostic so
complex-step differentiation can be pushed through them.
"""

from __future__ import annotations

import numpy as np

from .errors import InvariantViolation

# Hyperboloid membership / arccosh clamping tolerance.
TOL_H = 1e-9

E_SHARP = np.diag([1.0, 1.0, -1.0])

_SIG = np.array([1.0, 1.0, -1.0])


def mink_inner(X, Y):
    """(X, Y)# = x1 y1 + x2 y2 - x3 y3, broadcast over leading axes."""
    X = np.asarray(X)
    Y = np.asarray(Y)
    return X[..., 0] * Y[..., 0] + X[..., 1] * Y[..., 1] - X[..., 2] * Y[..., 2]


def sharp_vec(X):
    """Row covector X# = (E# X)^T, stored as the sign-flipped vector."""
    return np.asarray(X) * _SIG


def sharp_mat(B):
    """Minkowski adjoint B# = E# B^T E# of a (..., 3, 3) stack."""
    B = np.asarray(B)
    Bt = np.swapaxes(B, -1, -2)
    return _SIG[:, None] * Bt * _SIG[None, :]


def cross(X, Y):
    """Minkowski cross product X x Y = Y X# - X Y# in so(2,1).

    Returns a (..., 3, 3) stack of skew-adjoint matrices.  The map
    beta_X(v) = v x X identifies T_X H with the boost part of the
    algebra at X.
    """
    X = np.asarray(X)
    Y = np.asarray(Y)
    return (Y[..., :, None] * sharp_vec(X)[..., None, :]
            - X[..., :, None] * sharp_vec(Y)[..., None, :])


def alpha(X, W):
    """alpha_X(W) = W X: evaluate an algebra element at the base point."""
    return np.einsum("...ij,...j->...i", np.asarray(W), np.asarray(X))


def beta(X, v):
    """beta_X(v) = v x X, the boost with axis v at base point X."""
    return cross(v, X)


def killing(A, B):
    """Trace form Tr(A B) on matrix stacks (indefinite on so(2,1))."""
    return np.einsum("...ij,...ji->...", np.asarray(A), np.asarray(B))


def bar_op(X, W):
    """O_X W with O_X = I + 2 X X#, the tangent/normal sign flip."""
    return np.asarray(W) + 2.0 * mink_inner(W, X)[..., None] * np.asarray(X)


def bar_matrix(X):
    """O_X = I + 2 X X# as an explicit (..., 3, 3) stack."""
    X = np.asarray(X)
    eye = np.broadcast_to(np.eye(3), X.shape[:-1] + (3, 3))
    return eye + 2.0 * X[..., :, None] * sharp_vec(X)[..., None, :]


def bar_metric(X, W1, W2):
    """(W1, W2)+ = (W1, W2)# + 2 (W1, X)# (X, W2)#.

    Positive definite on all of R^{2,1} when X lies on H; agrees with
    (.,.)# on T_X H and flips the sign on the normal line, so
    (X, X)+ = +1.
    """
    return (mink_inner(W1, W2)
            + 2.0 * mink_inner(W1, X) * mink_inner(X, W2))


def bar_killing(X, A, B):
    """-Tr(O A O B), the bar-twisted Killing form at base point X.

    Positive definite on so(2,1): boosts beta_X(v) get +Tr(beta^2) =
    2 |v|^2 and the rotation stabiliser flips sign to positive.
    """
    O = bar_matrix(X)
    OA = np.einsum("...ij,...jk->...ik", O, np.asarray(A))
    OB = np.einsum("...ij,...jk->...ik", O, np.asarray(B))
    return -killing(OA, OB)


def bar_killing_norm(X, A):
    """sqrt of the bar-twisted Killing quadratic form, clipped at 0."""
    q = bar_killing(X, A, A)
    return np.sqrt(np.maximum(q, 0.0))


def tangent_project(X, W):
    """Pi_X W = W + (W, X)# X, the #-orthogonal projector onto T_X H."""
    return np.asarray(W) + mink_inner(W, X)[..., None] * np.asarray(X)


def normal_project(X, W):
    """Pi_X^perp W = -(W, X)# X, the component along the base point."""
    return -mink_inner(W, X)[..., None] * np.asarray(X)


def on_hyperboloid(X, tol=TOL_H):
    """Boolean mask: (X, X)# within tol of -1 and x3 >= 1 - tol."""
    X = np.asarray(X)
    return (np.abs(mink_inner(X, X) + 1.0) <= tol) & (X[..., 2] >= 1.0 - tol)


def check_on_hyperboloid(X, tol=TOL_H, what="point"):
    """Raise InvariantViolation unless every row of X lies on H."""
    X = np.asarray(X)
    ok = on_hyperboloid(X, tol=tol)
    if not np.all(ok):
        worst = float(np.max(np.abs(mink_inner(X, X) + 1.0)))
        raise InvariantViolation(
            f"{what} off the hyperboloid: max |(X,X)#+1| = {worst:.3e}, tol = {tol:.1e}")


def dist(X, Y, tol=TOL_H):
    """Hyperbolic distance arccosh(-(X, Y)#).

    Arguments of arccosh falling in [1 - tol, 1] are clamped to 1
    (coincident points up to rounding); anything smaller raises.
    """
    c = -mink_inner(X, Y)
    c = np.asarray(c, dtype=float)
    if np.any(c < 1.0 - tol):
        worst = float(np.min(c))
        raise InvariantViolation(
            f"dist: -(X,Y)# = {worst:.12f} < 1 - tol; inputs not both on upper sheet?")
    return np.arccosh(np.maximum(c, 1.0))


def delta(X, Y):
    """Chordal gap delta(X, Y) = (X - Y, X - Y)# = 2 (cosh dist - 1)."""
    D = np.asarray(X) - np.asarray(Y)
    return mink_inner(D, D)


def omega(X, Y):
    """omega(X, Y) = 1 + delta(X, Y)/2 = cosh dist(X, Y)."""
    return 1.0 + 0.5 * delta(X, Y)


def exp_map(X, v):
    """Geodesic exponential: cosh|v| X + sinh|v| v/|v|, |v|^2 = (v,v)#.

    v must be tangent at X ((v, X)# = 0 up to rounding); spacelike by
    construction then.  Accepts v = 0.
    """
    X = np.asarray(X)
    v = np.asarray(v)
    n2 = mink_inner(v, v)
    n = np.sqrt(n2 + 0j).real if np.iscomplexobj(v) else np.sqrt(np.maximum(n2, 0.0))
    # sinh(n)/n with the n -> 0 limit taken explicitly.
    small = np.abs(n) < 1e-8
    sn = np.where(small, 1.0 + n2 / 6.0, np.sinh(np.where(small, 1.0, n)) / np.where(small, 1.0, n))
    return np.cosh(n)[..., None] * X + sn[..., None] * v


def log_map(X, Y, tol=TOL_H):
    """Inverse of exp_map: the tangent v at X with exp_map(X, v) = Y.

    v = (Y - cosh t X) t / sinh t with t = dist(X, Y); the t -> 0
    limit is v = 0.
    """
    t = dist(X, Y, tol=tol)
    small = t < 1e-8
    fac = np.where(small, 1.0 - t * t / 6.0, t / np.sinh(np.where(small, 1.0, t)))
    return fac[..., None] * (np.asarray(Y) - np.cosh(t)[..., None] * np.asarray(X))


def retract(v, tol=TOL_H):
    """Radial retraction v -> v / sqrt(-(v, v)#) onto the upper sheet.

    Requires v timelike with positive third component.
    """
    v = np.asarray(v)
    q = -mink_inner(v, v)
    if np.any(q <= tol) or np.any(v[..., 2] <= 0.0):
        raise InvariantViolation(
            f"retract: input not a future timelike vector (min -(v,v)# = {float(np.min(q)):.3e})")
    return v / np.sqrt(q)[..., None]


def t_translation(a):
    """Isometry M_a: boost fixing the x1-axis, translating the geodesic
    (0, sinh T, cosh T) by T -> T + a.  M_a# = M_a^{-1} = M_{-a}."""
    c, s = np.cosh(a), np.sinh(a)
    return np.array([[1.0, 0.0, 0.0],
                     [0.0, c, s],
                     [0.0, s, c]])


def vector_cross(X, v):
    """Minkowski vector product: (X x# v, w)# = det[X, v, w].

    Computed as E# (X x_euclid v).  For X on H and v a unit tangent,
    X x# v is the unit tangent orthogonal to v (90-degree rotation of
    the tangent plane).
    """
    return _SIG * np.cross(np.asarray(X), np.asarray(v))


def tangent_norm(v):
    """|v| = sqrt((v, v)#) for spacelike (tangent) vectors."""
    return np.sqrt(np.maximum(mink_inner(v, v), 0.0))


def random_point(rng, radius=2.0, size=()):
    """Sample points on H: exp at (0,0,1) of a uniform-direction tangent
    with |v| ~ U(0, radius)."""
    size = (size,) if isinstance(size, int) else tuple(size)
    th = rng.uniform(0.0, 2.0 * np.pi, size=size)
    r = rng.uniform(0.0, radius, size=size)
    v = np.stack([r * np.cos(th), r * np.sin(th), np.zeros_like(r)], axis=-1)
    X0 = np.zeros(size + (3,))
    X0[..., 2] = 1.0
    return exp_map(X0, v)


def random_tangent(rng, X, scale=1.0):
    """Gaussian ambient vector #-projected to T_X H."""
    X = np.asarray(X)
    W = rng.normal(0.0, scale, size=X.shape)
    return tangent_project(X, W)
