"""Discretized collar neighborhood of a closed geodesic.

The domain is the cylinder [-h, h] x (R / d Z) with hyperbolic metric

    ds^2 + cosh(s)^2 dt^2,

carrying the orthonormal frame e_s = d/ds, e_t = cosh(s)^{-1} d/dt.
Maps into the hyperbolic plane are stored on the node grid of one
fundamental domain in t; crossing the t-seam composes with the
holonomy translation of length L d along the target geodesic

    mu(T) = (0, sinh T, cosh T),

so the lift satisfies T(t + d) = T(t) + L d exactly by construction.
Target collar coordinates (R, T) embed as

    (sinh R, cosh R sinh T, cosh R cosh T),

with metric tensor diag(1, cosh^2 R).

Discrete calculus: cell-centered bilinear differences (second order),
tangent-projected at the retracted cell-center value, and a cell
quadrature sum f cosh(s_c) ds dt.  Summation order is fixed (plain
row-major numpy reductions) so results are reproducible bit-for-bit.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace

import numpy as np

from . import minkowski as mk
from .errors import InvariantViolation
from .svnorm import TangentMap


@dataclass(frozen=True)
class Cylinder:
    """Collar geometry and grid resolution.

    h : half-width in arc length (s in [-h, h])
    d : domain geodesic length (t period)
    L : target stretch factor; target circumference is L d
    Ns: cells across (even, >= 4; nodes carry an s = 0 row)
    Nt: cells around (>= 4)
    """

    h: float
    d: float
    L: float
    Ns: int
    Nt: int

    def __post_init__(self):
        if not (np.isfinite(self.h) and self.h > 0):
            raise InvariantViolation(f"Cylinder: h = {self.h} must be finite > 0")
        if not (np.isfinite(self.d) and self.d > 0):
            raise InvariantViolation(f"Cylinder: d = {self.d} must be finite > 0")
        if not (np.isfinite(self.L) and self.L >= 1.0):
            raise InvariantViolation(f"Cylinder: L = {self.L} must be >= 1")
        if self.Ns < 4 or self.Ns % 2 != 0:
            raise InvariantViolation(f"Cylinder: Ns = {self.Ns} must be even and >= 4")
        if self.Nt < 4:
            raise InvariantViolation(f"Cylinder: Nt = {self.Nt} must be >= 4")

    @property
    def ds(self):
        return 2.0 * self.h / self.Ns

    @property
    def dt(self):
        return self.d / self.Nt

    @property
    def s_nodes(self):
        return -self.h + self.ds * np.arange(self.Ns + 1)

    @property
    def t_nodes(self):
        return self.dt * np.arange(self.Nt)

    @property
    def s_cells(self):
        return -self.h + self.ds * (np.arange(self.Ns) + 0.5)

    @property
    def t_cells(self):
        return self.dt * (np.arange(self.Nt) + 0.5)

    @property
    def area(self):
        return self.d * 2.0 * np.sinh(self.h)

    @property
    def holonomy_angle(self):
        return self.L * self.d

    def cell_weights(self):
        """Quadrature weights cosh(s_c) ds dt as an (Ns, Nt) array."""
        w = np.cosh(self.s_cells) * self.ds * self.dt
        return np.broadcast_to(w[:, None], (self.Ns, self.Nt)).copy()

    def node_weights(self):
        """Lumped node masses cosh(s_i) ds dt, halved on boundary rows."""
        w = np.cosh(self.s_nodes) * self.ds * self.dt
        w = np.repeat(w[:, None], self.Nt, axis=1)
        w[0] *= 0.5
        w[-1] *= 0.5
        return w

    def refined(self):
        return replace(self, Ns=2 * self.Ns, Nt=2 * self.Nt)


def target_embed(R, T):
    """(R, T) -> (sinh R, cosh R sinh T, cosh R cosh T) on the upper sheet.

    R = 0 traces the geodesic mu at unit speed.  dtype-preserving so
    complex-step derivatives can be pushed through.
    """
    sR, cR, T = np.broadcast_arrays(np.sinh(R), np.cosh(R), np.asarray(T))
    return np.stack([sR, cR * np.sinh(T), cR * np.cosh(T)], axis=-1)


def target_chart(X):
    """Inverse of target_embed: R = arcsinh(x1), T = artanh(x2 / x3)."""
    X = np.asarray(X)
    return np.arcsinh(X[..., 0]), np.arctanh(X[..., 1] / X[..., 2])


def holonomy(cyl: Cylinder):
    """Seam isometry M: u(., t + d) = M u(., t), translation by L d along mu."""
    return mk.t_translation(cyl.holonomy_angle)


@dataclass
class GridMap:
    """Node values of a map into H on one fundamental domain.

    values[i, j] is u(s_i, t_j), shape (Ns+1, Nt, 3).  The t-seam is
    implicit: u(., Nt) = holonomy @ u(., 0).
    """

    values: np.ndarray

    @classmethod
    def make(cls, values, cyl: Cylinder, tol=mk.TOL_H):
        values = np.asarray(values, dtype=float)
        if values.shape != (cyl.Ns + 1, cyl.Nt, 3):
            raise InvariantViolation(
                f"GridMap: shape {values.shape} != {(cyl.Ns + 1, cyl.Nt, 3)}")
        mk.check_on_hyperboloid(values, tol=tol, what="GridMap node")
        return cls(values=values)

    def copy(self):
        return GridMap(values=self.values.copy())


def embed_grid(cyl: Cylinder, R, T):
    """GridMap from node arrays (or broadcastable scalars) of target
    collar coordinates; T is the lift on the fundamental domain."""
    R = np.broadcast_to(np.asarray(R, float), (cyl.Ns + 1, cyl.Nt))
    T = np.broadcast_to(np.asarray(T, float), (cyl.Ns + 1, cyl.Nt))
    return GridMap(values=target_embed(R, T))


def embed_profile(cyl: Cylinder, R_of_s):
    """Separated map u(s, t) = target_embed(R(s), L t) on the node grid."""
    R = np.asarray(R_of_s(cyl.s_nodes), dtype=float)
    return embed_grid(cyl, R[:, None], cyl.L * cyl.t_nodes[None, :])


def extended_values(u: GridMap, cyl: Cylinder):
    """Append the seam column: (Ns+1, Nt+1, 3) with col Nt = M @ col 0."""
    M = holonomy(cyl)
    seam = u.values[:, :1] @ M.T
    return np.concatenate([u.values, seam], axis=1)


def discrete_differential(u: GridMap, cyl: Cylinder) -> TangentMap:
    """Cell-centered differential in the orthonormal frame (e_s, e_t).

    For each cell, bilinear differences of the four corner values give
    d/ds and cosh(s_c)^{-1} d/dt to second order; both are then
    #-projected onto the tangent plane at the retracted corner mean.
    Returns a TangentMap batch of shape (Ns, Nt).
    """
    Ue = extended_values(u, cyl)
    P00 = Ue[:-1, :-1]
    P10 = Ue[1:, :-1]
    P01 = Ue[:-1, 1:]
    P11 = Ue[1:, 1:]
    cs = np.cosh(cyl.s_cells)[:, None, None]
    d_s = (P10 + P11 - P00 - P01) / (2.0 * cyl.ds)
    d_t = (P01 + P11 - P00 - P10) / (2.0 * cyl.dt * cs)
    Xc = mk.retract(0.25 * (P00 + P10 + P01 + P11))
    cols = np.stack([d_s, d_t], axis=-2)
    cols = mk.tangent_project(Xc[..., None, :], cols)
    return TangentMap(base=Xc, cols=cols)


def node_differential(u: GridMap, cyl: Cylinder) -> TangentMap:
    """Node-centered differential for boundary diagnostics.

    Central differences in t (seam-aware); central in s inside, second
    order one-sided at the rows s = -h and s = +h.  Projected at the
    node values themselves.
    """
    U = u.values
    M = holonomy(cyl)
    left = U[:, -1:] @ mk.t_translation(-cyl.holonomy_angle).T
    right = U[:, :1] @ M.T
    Ut = np.concatenate([left, U, right], axis=1)
    cs = np.cosh(cyl.s_nodes)[:, None, None]
    d_t = (Ut[:, 2:] - Ut[:, :-2]) / (2.0 * cyl.dt * cs)

    d_s = np.empty_like(U)
    d_s[1:-1] = (U[2:] - U[:-2]) / (2.0 * cyl.ds)
    d_s[0] = (-3.0 * U[0] + 4.0 * U[1] - U[2]) / (2.0 * cyl.ds)
    d_s[-1] = (3.0 * U[-1] - 4.0 * U[-2] + U[-3]) / (2.0 * cyl.ds)

    cols = np.stack([d_s, d_t], axis=-2)
    cols = mk.tangent_project(U[..., None, :], cols)
    return TangentMap(base=U, cols=cols)


def quadrature(f, cyl: Cylinder):
    """Sum of f over cells against the area element cosh(s_c) ds dt.

    f is an (Ns, Nt) cell field (or broadcastable).  Fixed row-major
    summation order.
    """
    f = np.broadcast_to(np.asarray(f), (cyl.Ns, cyl.Nt))
    w = np.cosh(cyl.s_cells)[:, None]
    return float(np.sum(f * w) * cyl.ds * cyl.dt)


def refine_grid_map(u: GridMap, cyl: Cylinder):
    """Prolong u to the doubled grid (new nodes: retracted midpoints).

    Returns (u_fine, cyl_fine).  Used to warm-start grid-doubling
    studies; the twist column is preserved exactly.
    """
    fine = cyl.refined()
    Ue = extended_values(u, cyl)
    mid_s = mk.retract(0.5 * (Ue[:-1] + Ue[1:]))
    rows = np.empty((2 * cyl.Ns + 1, cyl.Nt + 1, 3))
    rows[0::2] = Ue
    rows[1::2] = mid_s
    mid_t = mk.retract(0.5 * (rows[:, :-1] + rows[:, 1:]))
    vals = np.empty((2 * cyl.Ns + 1, 2 * cyl.Nt, 3))
    vals[:, 0::2] = rows[:, :-1]
    vals[:, 1::2] = mid_t
    return GridMap.make(vals, fine), fine


def chart_frame(values):
    """Orthonormal tangent frame (d/dR, cosh(R)^{-1} d/dT) at node values.

    Built from the chart coordinates of the values themselves, so it is
    equivariant under the holonomy translation (T -> T + a maps the
    frame consistently across the seam).
    """
    R, T = target_chart(values)
    E1 = np.stack([np.cosh(R), np.sinh(R) * np.sinh(T), np.sinh(R) * np.cosh(T)],
                  axis=-1)
    E2 = np.stack([np.zeros_like(T), np.cosh(T), np.sinh(T)], axis=-1)
    return E1, E2


def gauge_fix(u: GridMap, cyl: Cylinder):
    """Rotate along mu so the node at (s, t) = (0, 0) has T-coordinate 0.

    The collar problem is invariant under target translation; this
    pins that gauge freedom for reproducible dumps.
    """
    i0 = cyl.Ns // 2
    _, T0 = target_chart(u.values[i0, 0])
    return GridMap(values=u.values @ mk.t_translation(-float(T0)).T)


def cellfield_to_csv(path, cyl: Cylinder, fields: dict, comment=None):
    """CSV dump of per-cell scalars: columns i, j, s_c, t_c, <names...>.

    comment, if given, is written first as a '# ...' line (provenance:
    tool version and config hash).
    """
    names = list(fields)
    arrays = [np.broadcast_to(np.asarray(fields[k]), (cyl.Ns, cyl.Nt)) for k in names]
    sc, tc = cyl.s_cells, cyl.t_cells
    with open(path, "w", newline="") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        wr = csv.writer(fh)
        wr.writerow(["i", "j", "s_c", "t_c"] + names)
        for i in range(cyl.Ns):
            for j in range(cyl.Nt):
                wr.writerow([i, j, repr(float(sc[i])), repr(float(tc[j]))]
                            + [repr(float(a[i, j])) for a in arrays])


def gridmap_to_csv(path, cyl: Cylinder, u: GridMap, comment=None):
    """CSV dump of node values: i, j, s, t, x1, x2, x3, R, T."""
    R, T = target_chart(u.values)
    s, t = cyl.s_nodes, cyl.t_nodes
    with open(path, "w", newline="") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        wr = csv.writer(fh)
        wr.writerow(["i", "j", "s", "t", "x1", "x2", "x3", "R", "T"])
        for i in range(cyl.Ns + 1):
            for j in range(cyl.Nt):
                x = u.values[i, j]
                wr.writerow([i, j, repr(float(s[i])), repr(float(t[j])),
                             repr(float(x[0])), repr(float(x[1])), repr(float(x[2])),
                             repr(float(R[i, j])), repr(float(T[i, j]))])


def load_gridmap_csv(path, cyl: Cylinder):
    """Inverse of gridmap_to_csv (coordinates x1, x2, x3 are trusted)."""
    vals = np.zeros((cyl.Ns + 1, cyl.Nt, 3))
    seen = 0
    with open(path, newline="") as fh:
        rd = csv.DictReader(line for line in fh if not line.startswith("#"))
        for row in rd:
            i, j = int(row["i"]), int(row["j"])
            if not (0 <= i <= cyl.Ns and 0 <= j < cyl.Nt):
                raise InvariantViolation(
                    f"load_gridmap_csv: node ({i}, {j}) outside the "
                    f"{cyl.Ns}x{cyl.Nt} grid; file written for another resolution?")
            vals[i, j] = (float(row["x1"]), float(row["x2"]), float(row["x3"]))
            seen += 1
    if seen != (cyl.Ns + 1) * cyl.Nt:
        raise InvariantViolation(
            f"load_gridmap_csv: {seen} rows, expected {(cyl.Ns + 1) * cyl.Nt}")
    return GridMap.make(vals, cyl)
