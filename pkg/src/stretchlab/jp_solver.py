"""Discrete J_p energy on the collar: evaluation, exact gradient,
projected-gradient minimization, and stationarity diagnostics.

The energy of a GridMap u is

    J_p(u) = sum_cells w_c (s_1^p + s_2^p),    w_c = cosh(s_c) ds dt,

with (s_1, s_2) the singular values of the cell-centered differential
(tangent-projected at the retracted corner mean X_c).  Equivalently,
per cell G = G_raw + c c^T where G_raw is the Gram matrix of the raw
bilinear differences and c_a = (d_a, X_c)#; both forms are used below.

grad_Jp is the exact derivative of this discrete functional: the chain
rule through the spectral function, the projection, and the retraction
of the cell center gives per-corner #-representers

    rep_k = w_c [ sigma_s(k)/ds z_s + sigma_t(k)/(cosh(s_c) dt) z_t
                  + (1/2) r^{-1/2} Pi_{X_c} y ],

    z_a = (K d)_a + (K c)_a X_c,   y = sum_a (K c)_a d_a,
    K   = (p/2) G^{p/2 - 1},       r = -(m, m)#,

accumulated over nodes (seam representers pulled back by the inverse
holonomy) and tangent-projected at the node values.  The Riemannian
gradient of the node-constrained problem is exactly that projection.

minimize is projected gradient descent with Armijo backtracking; the
trial step size follows a Barzilai-Borwein estimate.  Armijo certifies
descent only down to the float resolution of J_p, so past that floor
the iteration switches to a residual-monitored phase (see minimize).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import minkowski as mk
from .cylinder import (Cylinder, GridMap, chart_frame, discrete_differential,
                       extended_values, holonomy, quadrature)
from .errors import InvariantViolation, LineSearchFailed
from .svnorm import s_q, sym2_eig

BC_NEUMANN = "neumann"
BC_DIRICHLET = "dirichlet"


@dataclass
class SolverOptions:
    """Configuration of the projected-gradient solve.

    bc = "dirichlet" pins the boundary rows s = +-h to their values in
    the initial map; "neumann" leaves them free.
    """

    p: float
    bc: str = BC_NEUMANN
    max_iters: int = 5000
    grad_tol: float = 1e-7
    step0: float = 1e-2
    armijo_c1: float = 1e-4
    backtrack: float = 0.5
    grow: float = 1.3
    max_backtracks: int = 60
    patience: int = 5000
    seed: int = 0

    def __post_init__(self):
        if not self.p > 2:
            raise InvariantViolation(f"SolverOptions: p = {self.p} must be > 2")
        if self.bc not in (BC_NEUMANN, BC_DIRICHLET):
            raise InvariantViolation(f"SolverOptions: unknown bc {self.bc!r}")
        if self.grad_tol <= 0 or self.step0 <= 0:
            raise InvariantViolation("SolverOptions: tolerances must be positive")


@dataclass
class SolveResult:
    u: GridMap
    Jp: float
    el_residual: float
    iters: int
    converged: bool
    j_history: list = field(default_factory=list)


def _energy_core(ext, cyl: Cylinder, p, want_grad):
    """J_p and (optionally) the #-representer field on the extended grid.

    ext: (Ns+1, Nt+1, 3) node values with the seam column appended.
    """
    P00, P10, P01, P11 = ext[:-1, :-1], ext[1:, :-1], ext[:-1, 1:], ext[1:, 1:]
    csc = np.cosh(cyl.s_cells)[:, None]                     # (Ns, 1)
    d_s = (P10 + P11 - P00 - P01) / (2.0 * cyl.ds)
    d_t = (P01 + P11 - P00 - P10) / (2.0 * cyl.dt * csc[..., None])
    m = 0.25 * (P00 + P10 + P01 + P11)
    r = -mk.mink_inner(m, m)
    if np.any(r <= 0.0):
        raise InvariantViolation("J_p: cell-center mean not timelike")
    X = m / np.sqrt(r)[..., None]

    c_s = mk.mink_inner(d_s, X)
    c_t = mk.mink_inner(d_t, X)
    G = np.empty(d_s.shape[:-1] + (2, 2))
    G[..., 0, 0] = mk.mink_inner(d_s, d_s) + c_s * c_s
    G[..., 1, 1] = mk.mink_inner(d_t, d_t) + c_t * c_t
    G[..., 0, 1] = G[..., 1, 0] = mk.mink_inner(d_s, d_t) + c_s * c_t

    lam, V = sym2_eig(G)
    w_c = csc * (cyl.ds * cyl.dt)                           # (Ns, 1)
    J = float(np.sum(w_c * np.sum(lam ** (p / 2.0), axis=-1)))
    if not want_grad:
        return J, None

    K = np.einsum("...k,...ik,...jk->...ij",
                  (p / 2.0) * lam ** (p / 2.0 - 1.0), V, V)
    Kd_s = K[..., 0, 0, None] * d_s + K[..., 0, 1, None] * d_t
    Kd_t = K[..., 1, 0, None] * d_s + K[..., 1, 1, None] * d_t
    Kc_s = K[..., 0, 0] * c_s + K[..., 0, 1] * c_t
    Kc_t = K[..., 1, 0] * c_s + K[..., 1, 1] * c_t
    z_s = Kd_s + Kc_s[..., None] * X
    z_t = Kd_t + Kc_t[..., None] * X
    y = Kc_s[..., None] * d_s + Kc_t[..., None] * d_t

    a_s = (w_c / cyl.ds)[..., None] * z_s
    a_t = (w_c / (cyl.dt * csc))[..., None] * z_t
    a_m = (0.5 * w_c / np.sqrt(r))[..., None] * mk.tangent_project(X, y)

    rep = np.zeros_like(ext)
    rep[:-1, :-1] += -a_s - a_t + a_m
    rep[1:, :-1] += a_s - a_t + a_m
    rep[:-1, 1:] += -a_s + a_t + a_m
    rep[1:, 1:] += a_s + a_t + a_m
    return J, rep


def _extend(values, cyl: Cylinder):
    return np.concatenate([values, values[:, :1] @ holonomy(cyl).T], axis=1)


def J_p(u: GridMap, cyl: Cylinder, p):
    """Quadrature of Tr Q(du)^p over the cell differentials."""
    if p < 1:
        raise InvariantViolation(f"J_p: p = {p} must be >= 1")
    J, _ = _energy_core(_extend(u.values, cyl), cyl, p, want_grad=False)
    return J


def grad_Jp(u: GridMap, cyl: Cylinder, p):
    """Exact Riemannian gradient of the discrete J_p at the node values.

    Returns an (Ns+1, Nt, 3) field tangent to H at each node.  Seam
    representers are pulled back through the inverse holonomy before
    folding onto the stored fundamental domain.
    """
    if not p > 2:
        raise InvariantViolation(f"grad_Jp: p = {p} must be > 2")
    J, rep = _energy_core(_extend(u.values, cyl), cyl, p, want_grad=True)
    Minv = mk.t_translation(-cyl.holonomy_angle)
    rep[:, 0] += rep[:, -1] @ Minv.T
    g = mk.tangent_project(u.values, rep[:, :-1])
    return g


def el_residual(u: GridMap, cyl: Cylinder, p, bc=BC_NEUMANN):
    """Scale-free stationarity measure: the weighted L2 norm of the
    mass-normalized gradient (a discrete Euler-Lagrange density),
    divided by the collar area.

    For tangent vectors the bar metric coincides with (.,.)#, so the
    density norm is sum_i |g_i|^2 / w_i with lumped node masses w_i.
    """
    g = grad_Jp(u, cyl, p)
    w = cyl.node_weights()
    if bc == BC_DIRICHLET:
        g = g[1:-1]
        w = w[1:-1]
    q = np.sum(mk.mink_inner(g, g) / w)
    return float(np.sqrt(max(q, 0.0)) / cyl.area)


def minimize(init: GridMap, cyl: Cylinder, opts: SolverOptions) -> SolveResult:
    """Projected gradient descent on node values constrained to H.

    Each step maps node <- retract(node - step * d) on the free rows,
    with the node-mass preconditioned direction d = grad / w (the
    discrete Euler-Lagrange density; the 1/w scaling equalizes the
    half-weighted boundary rows) and a Barzilai-Borwein trial step.
    Two phases:

      1. Monotone descent: steps must satisfy the Armijo decrease
         J(trial) <= J - c1 * step * (grad, d), backtracking otherwise.
      2. Once Armijo can no longer certify descent (near a minimizer
         the best achievable decrease falls under the float resolution
         eps * J_p, i.e. a residual floor ~ sqrt(eps J / curvature)),
         the iteration continues unguarded, monitored by the
         stationarity residual.  BB residuals are transiently
         non-monotone, so the phase keeps the best iterate seen and
         gives up only after opts.patience steps without improvement.

    Raises LineSearchFailed (with the best partial result attached)
    only if phase 2 also stalls above grad_tol.
    """
    p = opts.p
    U = init.values.copy()
    free = slice(1, -1) if opts.bc == BC_DIRICHLET else slice(None)
    w_node = cyl.node_weights()
    w_free = w_node[free]

    def residual(g):
        q = np.sum(mk.mink_inner(g[free], g[free]) / w_free)
        return float(np.sqrt(max(q, 0.0)) / cyl.area)

    J, rep = _energy_core(_extend(U, cyl), cyl, p, want_grad=True)
    Minv = mk.t_translation(-cyl.holonomy_angle)

    def fold_grad(rep, U):
        rep[:, 0] += rep[:, -1] @ Minv.T
        g = mk.tangent_project(U, rep[:, :-1])
        if opts.bc == BC_DIRICHLET:
            g[0] = 0.0
            g[-1] = 0.0
        return g

    g = fold_grad(rep, U)
    d = g / w_node[..., None]
    res = residual(g)
    history = [J]
    step = opts.step0
    prev_U = None
    prev_d = None
    iters = 0

    def bb_step(step):
        if prev_U is not None:
            dU = (U - prev_U).ravel()
            dD = (d - prev_d).ravel()
            sy = float(dU @ dD)
            if sy > 0.0:
                step = float(dU @ dU) / sy
            else:
                step = step * opts.grow
        return float(np.clip(step, 1e-18, 1e6))

    # Phase 1: Armijo-guarded, monotone in J_p.
    armijo_floor = False
    while iters < opts.max_iters:
        if res <= opts.grad_tol:
            return SolveResult(GridMap(U), J, res, iters, True, history)
        slope = float(np.sum(mk.mink_inner(g[free], d[free])))
        step = bb_step(step)

        accepted = False
        for _ in range(opts.max_backtracks):
            trial = U.copy()
            try:
                trial[free] = mk.retract(U[free] - step * d[free])
            except InvariantViolation:
                step *= opts.backtrack
                continue
            Jt, _ = _energy_core(_extend(trial, cyl), cyl, p, want_grad=False)
            if Jt <= J - opts.armijo_c1 * step * slope:
                accepted = True
                break
            step *= opts.backtrack
        if not accepted:
            armijo_floor = True
            break

        prev_U, prev_d = U, d
        U, J = trial, Jt
        _, rep = _energy_core(_extend(U, cyl), cyl, p, want_grad=True)
        g = fold_grad(rep, U)
        d = g / w_node[..., None]
        res = residual(g)
        history.append(J)
        iters += 1

    if not armijo_floor:
        return SolveResult(GridMap(U), J, res, iters, res <= opts.grad_tol, history)

    # Phase 2: residual-monitored refinement below the Armijo floor.
    best_U, best_J, best_res = U.copy(), J, res
    since_best = 0
    while iters < opts.max_iters and since_best < opts.patience:
        if res <= opts.grad_tol:
            return SolveResult(GridMap(U), J, res, iters, True, history)
        step = bb_step(step)
        trial = U.copy()
        try:
            trial[free] = mk.retract(U[free] - step * d[free])
        except InvariantViolation:
            step *= opts.backtrack
            since_best += 1
            continue
        Jt, rep = _energy_core(_extend(trial, cyl), cyl, p, want_grad=True)
        prev_U, prev_d = U, d
        U, J = trial, Jt
        g = fold_grad(rep, U)
        d = g / w_node[..., None]
        res = residual(g)
        history.append(J)
        iters += 1
        if res < best_res:
            best_U, best_J, best_res = U.copy(), J, res
            since_best = 0
        else:
            since_best += 1

    if res <= opts.grad_tol:
        return SolveResult(GridMap(U), J, res, iters, True, history)
    partial = SolveResult(GridMap(best_U), best_J, best_res, iters, False, history)
    raise LineSearchFailed(
        f"residual stalled at {best_res:.3e} (> grad_tol {opts.grad_tol:.3e}) "
        f"after {iters} iters", partial)


# ---------------------------------------------------------------------------
# Stationarity diagnostics
# ---------------------------------------------------------------------------

@dataclass
class NoetherCurrent:
    """Cell field of the conserved so(2,1)-valued current V = *(S_{p-1}(k du) x u).

    Vs, Vt: (Ns, Nt, 3, 3) frame components (skew-adjoint matrices);
    defect: max over interior plaquettes of the bar-Killing norm of the
    discrete exterior derivative (raw circulation 2-cochain).
    """

    Vs: np.ndarray
    Vt: np.ndarray
    kappa: float
    defect: float

    def frame_norms(self):
        """Killing norms sqrt(Tr V_a^2) per cell and frame direction
        (boost components have positive trace square)."""
        ns = np.sqrt(np.maximum(np.einsum("...ij,...ji->...", self.Vs, self.Vs), 0.0))
        nt = np.sqrt(np.maximum(np.einsum("...ij,...ji->...", self.Vt, self.Vt), 0.0))
        return ns, nt


def noether_current(u: GridMap, cyl: Cylinder, p, kappa=1.0):
    """Conserved current of the target isometry symmetry and the
    discrete measure of its closedness.

    Per cell, A = S_{p-1}(kappa du), W_a = beta_{X_c}(A_a) = A_a x X_c,
    and the Hodge star rotates the frame components:
    V_s = -W_t, V_t = +W_s.  The closedness defect is the maximum
    bar-Killing norm over interior nodes of the plaquette circulation

        circ = dt avg_j [C_t(i) - C_t(i-1)] - ds avg_i [V_s(j) - V_s(j-1)],

    C_t = cosh(s_c) V_t, crossing the t-seam by conjugating with the
    holonomy.  The circulation is a raw 2-cochain (not a density): for
    smooth critical maps it scales like Delta^4.
    """
    du = discrete_differential(u, cyl)
    S = s_q(du, p - 1.0)
    A = (kappa ** (p - 1.0)) * S.cols
    W_s = mk.cross(A[..., 0, :], du.base)
    W_t = mk.cross(A[..., 1, :], du.base)
    Vs = -W_t
    Vt = W_s

    csc = np.cosh(cyl.s_cells)[:, None, None, None]
    Ct = Vt * csc

    M = holonomy(cyl)
    Minv = mk.t_translation(-cyl.holonomy_angle)
    wrap = lambda F: np.concatenate([np.einsum("ij,...jk,kl->...il", Minv, F[:, -1:], M), F],
                                    axis=1)
    Vs_e = wrap(Vs)
    Ct_e = wrap(Ct)

    # Node (i, j), i = 1..Ns-1: adjacent cell columns are e-indices j, j+1
    # and cell rows i-1, i.
    dt_term = 0.5 * cyl.dt * (Ct_e[1:, :-1] + Ct_e[1:, 1:]
                              - Ct_e[:-1, :-1] - Ct_e[:-1, 1:])
    ds_term = 0.5 * cyl.ds * (Vs_e[:-1, 1:] - Vs_e[:-1, :-1]
                              + Vs_e[1:, 1:] - Vs_e[1:, :-1])
    circ = dt_term - ds_term                                   # (Ns-1, Nt, 3, 3)
    nodes = u.values[1:-1]
    defect = float(np.max(mk.bar_killing_norm(nodes, circ))) if circ.size else 0.0
    return NoetherCurrent(Vs=Vs, Vt=Vt, kappa=float(kappa), defect=defect)


def closedness_defect(u: GridMap, cyl: Cylinder, p, kappa=1.0):
    return noether_current(u, cyl, p, kappa=kappa).defect


def _hodge_star_cols(cols):
    """Frame rotation e_s -> e_t, e_t -> -e_s on (..., 2, 3) components:
    (*w)_s = -w_t, (*w)_t = +w_s."""
    return np.stack([-cols[..., 1, :], cols[..., 0, :]], axis=-2)


def dual_stationarity_check(u: GridMap, cyl: Cylinder, p, trials=100,
                            eps=1e-3, seed=0):
    """Necessary-condition probe for the dual q-energy, q = p/(p-1):

        J_q(xi) = integral Tr Q(Z + (d xi)_u)^q,   Z = *S_{p-1}(du),

    should be minimized at xi = 0 when u is critical.  Samples smooth
    random tangent sections xi, vanishing on the boundary rows (the
    minimality argument integrates d<*du, xi> by parts, so only
    relative-class variations qualify on a collar with boundary), at
    amplitudes +-eps and reports the worst J_q(eps xi) - J_q(0)
    against a slack of

        1e-8 J_q(0) + eps |J_q(0) - J_q(0) on the 2x-coarsened grid|

    (the consistency term measures how far the discrete Z is from the
    continuum conservation law).  In the continuum the first variation
    collapses, S_{q-1}(*S_{p-1}(du)) = *du, and integrates to zero by
    d(du) = 0, for critical and non-critical maps alike; what the probe
    actually exercises is the consistency of the discrete cell/node
    calculus with that exactness.  Rough maps inflate the gap through
    the commutation error of the discrete operators, converged maps
    sit at the discretization floor.
    """
    q = p / (p - 1.0)
    rng = np.random.default_rng(seed)

    def dual_energy(uu, cc, xi):
        du = discrete_differential(uu, cc)
        Z = _hodge_star_cols(s_q(du, p - 1.0).cols)
        if xi is not None:
            xe = np.concatenate([xi, xi[:, :1] @ holonomy(cc).T], axis=1)
            X00, X10, X01, X11 = xe[:-1, :-1], xe[1:, :-1], xe[:-1, 1:], xe[1:, 1:]
            csc = np.cosh(cc.s_cells)[:, None, None]
            dxi_s = (X10 + X11 - X00 - X01) / (2.0 * cc.ds)
            dxi_t = (X01 + X11 - X00 - X10) / (2.0 * cc.dt * csc)
            dxi = np.stack([dxi_s, dxi_t], axis=-2)
            dxi = mk.tangent_project(du.base[..., None, :], dxi)
            Z = Z + dxi
        lam, _ = sym2_eig(mk.mink_inner(Z[..., :, None, :], Z[..., None, :, :]))
        return quadrature(np.sum(np.sqrt(lam) ** q, axis=-1), cc)

    J0 = dual_energy(u, cyl, None)

    # Consistency slack from node-subsampling to the 2x coarser grid.
    if cyl.Ns % 4 == 0 and cyl.Nt % 2 == 0 and cyl.Ns >= 8 and cyl.Nt >= 8:
        coarse = Cylinder(cyl.h, cyl.d, cyl.L, cyl.Ns // 2, cyl.Nt // 2)
        J0c = dual_energy(GridMap(u.values[::2, ::2]), coarse, None)
        slack = 1e-8 * abs(J0) + eps * abs(J0 - J0c)
    else:
        slack = 1e-8 * abs(J0) + 0.05 * eps * abs(J0)

    E1, E2 = chart_frame(u.values)
    s_n = cyl.s_nodes[:, None]
    t_n = cyl.t_nodes[None, :]
    worst = np.inf
    worst_case = None
    for k in range(trials):
        amps = rng.normal(size=(2, 3))
        freq_t = rng.integers(0, 3, size=3)
        freq_s = rng.integers(1, 4, size=3)
        phase = rng.uniform(0.0, 2.0 * np.pi, size=3)
        # sin(pi k (s + h) / 2h) vanishes at both boundary rows.
        a = sum(amps[0, m] * np.cos(2.0 * np.pi * freq_t[m] * t_n / cyl.d + phase[m])
                * np.sin(0.5 * np.pi * freq_s[m] * (s_n + cyl.h) / cyl.h)
                for m in range(3))
        b = sum(amps[1, m] * np.sin(2.0 * np.pi * freq_t[m] * t_n / cyl.d + phase[m])
                * np.sin(0.5 * np.pi * freq_s[m] * (s_n + cyl.h) / cyl.h)
                for m in range(3))
        xi = a[..., None] * E1 + b[..., None] * E2
        nrm = float(np.sqrt(np.max(mk.mink_inner(xi, xi))))
        if nrm == 0.0:
            continue
        xi = xi / nrm
        for sgn in (+1.0, -1.0):
            Jx = dual_energy(u, cyl, sgn * eps * xi)
            gap = Jx - J0
            if gap < worst:
                worst = gap
                worst_case = {"trial": k, "sign": sgn}
    passed = bool(worst >= -slack)
    return {
        "q": q,
        "J0": float(J0),
        "slack": float(slack),
        "worst_gap": float(worst),
        "worst_case": worst_case,
        "trials": int(trials),
        "eps": float(eps),
        "passed": passed,
    }


def convexity_check(u0: GridMap, u1: GridMap, cyl: Cylinder, p, samples=9,
                    tol=1e-10):
    """J_p along the node-wise geodesic homotopy between u0 and u1.

    Checks discrete midpoint convexity on the sampled values:
    J(tau_k) <= (J(tau_{k-1}) + J(tau_{k+1}))/2 + tol * scale.  Also
    reports the flat range max J - min J (isometry-orbit endpoints give
    a constant profile).
    """
    if samples < 3:
        raise InvariantViolation("convexity_check: need at least 3 samples")
    logv = mk.log_map(u0.values, u1.values)
    taus = np.linspace(0.0, 1.0, samples)
    Js = []
    for tau in taus:
        ut = GridMap(mk.exp_map(u0.values, tau * logv))
        Js.append(J_p(ut, cyl, p))
    Js = np.asarray(Js)
    scale = max(1.0, float(np.max(np.abs(Js))))
    margins = 0.5 * (Js[:-2] + Js[2:]) - Js[1:-1]
    worst = float(np.min(margins)) if margins.size else 0.0
    return {
        "tau": taus.tolist(),
        "J": Js.tolist(),
        "worst_margin": worst,
        "passed": bool(worst >= -tol * scale),
        "flat_range": float(np.max(Js) - np.min(Js)),
    }
