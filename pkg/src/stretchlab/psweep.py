"""p -> infinity experiment harness.

For a converged p-energy minimizer u_p the normalization

    kappa_p = J_p(u_p)^{-1/p}

makes the density |S_{p-1}| = Tr Q(kappa_p du_p)^p integrate to 1;
kappa_p -> 1/L as p grows, the renormalized energy roots J_p^{1/p}
climb toward the stretch L, and the unit mass concentrates on the
core geodesic s = 0.  The harness sweeps an increasing p-list with
warm starts, records the normalized diagnostics per p, and
path-integrates the conserved current into its local primitive v_q
(dv_q = V_q on the simply connected chart, defined up to the recorded
loop defects).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import minkowski as mk
from .cylinder import Cylinder, GridMap, discrete_differential, embed_grid, quadrature
from .errors import DegenerateMap, LineSearchFailed, StretchLabError
from .jp_solver import (J_p, NoetherCurrent, SolverOptions, el_residual,
                        minimize, noether_current)
from .svnorm import singular_values

EPS_LIST_DEFAULT = (0.05, 0.1, 0.2)


def kappa(u_p: GridMap, cyl: Cylinder, p):
    """Normalizing factor kappa_p = J_p(u_p)^{-1/p}.

    Raises DegenerateMap for (numerically) constant maps.
    """
    J = J_p(u_p, cyl, p)
    if J <= 0.0:
        raise DegenerateMap(f"kappa: J_p = {J} (constant map?)")
    return float(J ** (-1.0 / p))


def density_S(u_p: GridMap, cyl: Cylinder, p, kap):
    """Cell density Tr Q(kappa du_p)^p = kappa^p (s1^p + s2^p).

    With kap from kappa() the quadrature of the density is 1 (to
    floating point roundoff of the power identity).
    """
    s = singular_values(discrete_differential(u_p, cyl))
    return (kap ** p) * (s[..., 0] ** p + s[..., 1] ** p)


def concentration(density, cyl: Cylinder, eps):
    """Mass fraction of the density carried by cells with |s_c| <= eps."""
    mask = (np.abs(cyl.s_cells) <= eps)[:, None]
    total = quadrature(density, cyl)
    if total == 0.0:
        raise DegenerateMap("concentration: zero total mass")
    return float(quadrature(np.where(mask, density, 0.0), cyl) / total)


def lipschitz_estimate(u: GridMap, cyl: Cylinder):
    """Max cell operator norm s1(du): discrete stand-in for the
    Lipschitz constant (sv^inf norm)."""
    s = singular_values(discrete_differential(u, cyl))
    return float(np.max(s[..., 0]))


@dataclass
class SweepRecord:
    p: float
    kappa_p: float
    Jp: float
    Jp_root: float
    lipschitz_est: float
    el_residual: float
    el_residual_rel: float
    mass_S: float
    concentration: dict
    closedness_defect: float
    converged: bool
    iters: int
    error: Optional[str] = None

    def to_dict(self):
        out = {k: getattr(self, k) for k in (
            "p", "kappa_p", "Jp", "Jp_root", "lipschitz_est", "el_residual",
            "el_residual_rel", "mass_S", "closedness_defect", "converged",
            "iters", "error")}
        out["concentration"] = {str(k): float(v) for k, v in self.concentration.items()}
        return out


def default_init(cyl: Cylinder, amplitude=0.02, seed=0, R0=0.0):
    """Perturbed initial map: R = R0 s/h + a bump amplitude cos(pi s/2h)
    times a random smooth wobble, T = L t plus a matching wobble.

    The perturbation vanishes on the boundary rows, so with R0 != 0 the
    rows s = +-h carry the exact Dirichlet data embed(+-R0, L t).
    """
    rng = np.random.default_rng(seed)
    s = cyl.s_nodes[:, None]
    t = cyl.t_nodes[None, :]
    bump = np.cos(0.5 * np.pi * s / cyl.h)
    R = R0 * s / cyl.h + amplitude * bump * (
        1.0 + 0.3 * np.cos(2.0 * np.pi * t / cyl.d + rng.uniform(0, 2 * np.pi)))
    T = cyl.L * t + 0.1 * amplitude * np.sin(2.0 * np.pi * t / cyl.d) * bump
    R, T = np.broadcast_arrays(R, T)
    return embed_grid(cyl, R, T)


def sweep(p_list, cyl: Cylinder, opts: SolverOptions, eps_list=EPS_LIST_DEFAULT,
          init: Optional[GridMap] = None, store_maps=False):
    """Warm-started Neumann/Dirichlet solves over an increasing p-list.

    opts.p is ignored; opts.grad_tol is interpreted relative to the
    per-p gradient scale p J_p / area (gradients grow like s1^{p-1},
    so an absolute tolerance cannot span a sweep).  Initial steps
    shrink like step0 * 4/p.  Solver failures are recorded in the
    per-p record (error field) and the sweep continues from the
    partial iterate.

    Returns a list of SweepRecord (and the solved maps if store_maps).
    """
    p_list = [float(p) for p in p_list]
    if any(p2 <= p1 for p1, p2 in zip(p_list, p_list[1:])) or any(p <= 2 for p in p_list):
        raise StretchLabError("sweep: p_list must be strictly increasing with p > 2")

    u = init if init is not None else default_init(cyl, seed=opts.seed)
    records = []
    maps = []
    for p in p_list:
        Jinit = J_p(u, cyl, p)
        tol_abs = opts.grad_tol * p * max(Jinit, 1e-300) / cyl.area
        opts_p = replace(opts, p=p, grad_tol=tol_abs,
                         step0=opts.step0 * 4.0 / p)
        err = None
        try:
            result = minimize(u, cyl, opts_p)
        except LineSearchFailed as exc:
            result = exc.result
            err = str(exc)
        u = result.u

        kap = kappa(u, cyl, p)
        dens = density_S(u, cyl, p, kap)
        rec = SweepRecord(
            p=p,
            kappa_p=kap,
            Jp=result.Jp,
            Jp_root=float(result.Jp ** (1.0 / p)),
            lipschitz_est=lipschitz_estimate(u, cyl),
            el_residual=result.el_residual,
            el_residual_rel=float(result.el_residual / (p * max(result.Jp, 1e-300) / cyl.area)),
            mass_S=float(quadrature(dens, cyl)),
            concentration={eps: concentration(dens, cyl, eps) for eps in eps_list},
            closedness_defect=noether_current(u, cyl, p, kappa=kap).defect,
            converged=result.converged,
            iters=result.iters,
            error=err,
        )
        records.append(rec)
        if store_maps:
            maps.append(u)
    return (records, maps) if store_maps else records


# ---------------------------------------------------------------------------
# Primitive of the current
# ---------------------------------------------------------------------------

def _killing_norm(A):
    """sqrt(Tr A^2) clipped at 0 (positive on boost components)."""
    return np.sqrt(np.maximum(np.einsum("...ij,...ji->...", A, A), 0.0))


@dataclass
class PrimitiveSample:
    """Path integrals v_q of the current 1-form on the cell lattice.

    v_axis: (Ns, 3, 3) values along the s-axis cell column at t-column
    0, anchored so the interpolated value at s = 0 vanishes; v_grid:
    full cell-lattice primitive integrated s-column-first; tv_s: total
    variation (Killing norm) across s; loop_defect_max: worst plaquette
    circulation (Frobenius norm, same 2-cochain normalization as
    closedness_defect); path_dependence: worst discrepancy against the
    t-row-first integration order.
    """

    s: np.ndarray
    v_axis: np.ndarray
    v_grid: np.ndarray
    tv_s: float
    loop_defect_max: float
    path_dependence: float


def primitive_vq(current: NoetherCurrent, cyl: Cylinder) -> PrimitiveSample:
    """Integrate the so(2,1)-valued current 1-form V_s ds + V_t cosh s dt
    to its primitive on the (simply connected) fundamental domain.

    Trapezoid rule between adjacent cell centers; the anchor v(0,0) = 0
    sits on the s = 0 line between the two middle cell rows.  Loop
    defects over interior plaquettes are reported, not assumed zero.
    """
    Vs, Vt = current.Vs, current.Vt
    Ns, Nt = cyl.Ns, cyl.Nt
    ds, dt = cyl.ds, cyl.dt
    Ct = Vt * np.cosh(cyl.s_cells)[:, None, None, None]

    # s-axis column (t-column 0), anchored at the s = 0 node line.
    mid = Ns // 2
    v_col = np.zeros((Ns, 3, 3))
    v_col[mid] = 0.5 * ds * Vs[mid, 0]
    for i in range(mid, Ns - 1):
        v_col[i + 1] = v_col[i] + 0.5 * ds * (Vs[i, 0] + Vs[i + 1, 0])
    v_col[mid - 1] = -0.5 * ds * Vs[mid - 1, 0]
    for i in range(mid - 1, 0, -1):
        v_col[i - 1] = v_col[i] - 0.5 * ds * (Vs[i, 0] + Vs[i - 1, 0])

    # Full grid, s-column first then t-rows (path A).
    vA = np.zeros((Ns, Nt, 3, 3))
    vA[:, 0] = v_col
    for j in range(Nt - 1):
        vA[:, j + 1] = vA[:, j] + 0.5 * dt * (Ct[:, j] + Ct[:, j + 1])

    # t-row first along the middle cell row, then s-columns (path B).
    vB = np.zeros_like(vA)
    vB[mid, 0] = v_col[mid]
    for j in range(Nt - 1):
        vB[mid, j + 1] = vB[mid, j] + 0.5 * dt * (Ct[mid, j] + Ct[mid, j + 1])
    for i in range(mid, Ns - 1):
        vB[i + 1] = vB[i] + 0.5 * ds * (Vs[i] + Vs[i + 1])
    for i in range(mid, 0, -1):
        vB[i - 1] = vB[i] - 0.5 * ds * (Vs[i] + Vs[i - 1])

    path_dep = float(np.max(np.sqrt(np.sum((vA - vB) ** 2, axis=(-2, -1))))) \
        if vA.size else 0.0

    # Plaquette loop defects (interior nodes, seam plaquettes excluded:
    # they need the holonomy conjugation which lives with the current).
    dt_term = 0.5 * dt * (Ct[1:, :-1] + Ct[1:, 1:] - Ct[:-1, :-1] - Ct[:-1, 1:])
    ds_term = 0.5 * ds * (Vs[:-1, 1:] - Vs[:-1, :-1] + Vs[1:, 1:] - Vs[1:, :-1])
    circ = dt_term - ds_term
    loop_max = float(np.max(np.sqrt(np.sum(circ ** 2, axis=(-2, -1))))) if circ.size else 0.0

    # TV across s ~ int |V_s| ds: interior steps plus the half cells
    # between the outermost centers and the s = +-h boundary.
    steps = _killing_norm(np.diff(v_col, axis=0))
    tv = float(np.sum(steps)
               + 0.5 * ds * (_killing_norm(Vs[0, 0]) + _killing_norm(Vs[-1, 0])))

    return PrimitiveSample(s=cyl.s_cells.copy(), v_axis=v_col, v_grid=vA,
                           tv_s=tv, loop_defect_max=loop_max,
                           path_dependence=path_dep)
