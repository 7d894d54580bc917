"""Separated-variable radial profiles R(s) on the collar.

For maps u(s, t) = (R(s), L t) in target collar coordinates the energy
per unit t-length reduces to the 1-D functional

    E_p(R) = int_0^h ( |R'|^p + (L cosh R / cosh s)^p ) cosh s ds

(one symmetric half; profiles extend oddly, R(-s) = -R(s)).  Its
Euler-Lagrange equation is the degenerate second-order ODE

    d/ds ( cosh s R' |R'|^{p-2} ) = L^p (cosh R / cosh s)^{p-1} sinh R.

The solver integrates the first-order flux form in the substituted
variable sigma with d sigma/ds = cosh(s)^{-1/(p-1)}:

    dR/d sigma   = Phi^{1/(p-1)}                  (exact identity)
    dPhi/d sigma = L^p cosh(R)^{p-1} sinh(R) cosh(s)^{-p*}
    ds/d sigma   = cosh(s)^{1/(p-1)},

with Phi = cosh(s) (dR/ds)^{p-1} and p* = p - 1 - 1/(p-1).  The right
side of dPhi/d sigma does not involve Phi, so the system stays
non-stiff down to Phi = 0 (where R' = 0 exactly).  Phi is
non-negative and non-decreasing, so R' >= 0 is non-decreasing in
sigma, and along any solution the sandwich

    (R'_2)^p - (R'_1)^p  <  p/(p-1) L^p cosh(s_1)^{-p*}
                             [ (cosh R_2)^p - (cosh R_1)^p ] / p ...

holds with cosh(s_1) replaced by cosh(s_2) for the reverse bound
(primes are sigma-derivatives; see check_profile_steps).

The flux law is degenerate (Phi^{1/(p-1)} is not Lipschitz at 0), so
solutions can leave R = 0 along the similarity envelope
R = K sigma^{p/(p-2)}.  Consequently R(h) does NOT tend to 0 as the
initial slope does: it tends to the envelope value.  Boundary data
below that value belong to dead-core solutions (R = 0 up to a
lift-off point s0, similarity lift-off after); shoot_dirichlet
bisects the initial slope above the envelope and the lift-off point
below it.

The p -> infinity limit profile is piecewise: flat, then linear with
slope L/cosh(s*), then the first-order growth law R' = L cosh R/cosh s
from the matching point onward.  The ideal piecewise-linear comparison
profile on [0, 2 h0] and its stretch bounds live here as well.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import InvariantViolation, NoBracket

REGION_FLAT = "flat"
REGION_LINEAR = "linear"
REGION_GROWTH = "growth"
REGION_IVP = "ivp"


@dataclass
class Profile:
    """Radial profile sampled on a uniform s-grid.

    s, R, Rprime: arrays of equal length (Rprime = dR/ds samples);
    region: per-sample label; meta: provenance (p, L, slope0, s_star,
    ...); sigma_data: raw sigma-grid samples for IVP solutions
    {"sigma", "R", "dRdsigma", "s"} with exact sigma-derivatives.
    """

    s: np.ndarray
    R: np.ndarray
    Rprime: np.ndarray
    region: np.ndarray
    meta: dict = field(default_factory=dict)
    sigma_data: Optional[dict] = None

    def validate(self, tol=1e-10):
        """Check the structural invariants: R(0) = 0, R non-decreasing,
        R' >= 0 and non-decreasing."""
        if abs(float(self.R[0])) > tol:
            raise InvariantViolation(f"Profile: R(0) = {self.R[0]:.3e} != 0")
        if np.any(np.diff(self.R) < -tol * max(1.0, float(self.R[-1]))):
            raise InvariantViolation("Profile: R not monotone non-decreasing")
        if np.any(self.Rprime < -tol):
            raise InvariantViolation("Profile: R' negative")
        if np.any(np.diff(self.Rprime) < -tol * max(1.0, float(np.max(self.Rprime)))):
            raise InvariantViolation("Profile: R' not non-decreasing")
        return True


def _simpson(y, x):
    """Composite Simpson on a uniform grid (3/8 rule on a trailing odd
    segment)."""
    y = np.asarray(y, float)
    n = len(y) - 1
    if n < 2:
        return float(np.trapezoid(y, x))
    dx = (x[-1] - x[0]) / n
    if n % 2 == 0:
        s = y[0] + y[-1] + 4.0 * np.sum(y[1:-1:2]) + 2.0 * np.sum(y[2:-2:2])
        return float(s * dx / 3.0)
    # even-length head + 3/8 tail
    head = y[: n - 2]
    s = head[0] + head[-1] + 4.0 * np.sum(head[1:-1:2]) + 2.0 * np.sum(head[2:-2:2])
    tail = y[n - 3:]
    return float(s * dx / 3.0 + dx * 3.0 / 8.0 * (tail[0] + 3 * tail[1] + 3 * tail[2] + tail[3]))


def label_A_energy(profile: Profile, p, L, h=None):
    """Composite Simpson quadrature of the half-collar profile energy
    (|R'|^p + (L cosh R/cosh s)^p) cosh s on [0, h]."""
    if p < 2:
        raise InvariantViolation(f"label_A_energy: p = {p} must be >= 2")
    s, R, Rp = profile.s, profile.R, profile.Rprime
    integrand = (np.abs(Rp) ** p
                 + (L * np.cosh(R) / np.cosh(s)) ** p) * np.cosh(s)
    return _simpson(integrand, s)


def ode_rhs(s, R, Rp, p, L):
    """R'' from the radial Euler-Lagrange equation (s-derivatives).

    Valid only where R' != 0 (the |R'|^{p-2} factor is inverted); the
    flux formulation below handles the degenerate branch.
    """
    if Rp == 0.0:
        if R == 0.0:
            return 0.0
        raise InvariantViolation(
            "ode_rhs: R' = 0 with R != 0 is degenerate; use solve_ivp_sigma")
    drive = L ** p * (np.cosh(R) / np.cosh(s)) ** (p - 1.0) * np.sinh(R)
    denom = (p - 1.0) * np.cosh(s) * np.abs(Rp) ** (p - 2.0)
    if denom == 0.0 or not np.isfinite(denom):
        raise InvariantViolation(
            f"ode_rhs: |R'|^(p-2) = {np.abs(Rp) ** (p - 2.0):.3e} is numerically degenerate")
    return (drive - np.sinh(s) * Rp * np.abs(Rp) ** (p - 2.0)) / denom


def p_star(p):
    """Exponent p* = p - 1 - 1/(p-1) of the sigma-form flux law."""
    return p - 1.0 - 1.0 / (p - 1.0)


def sigma_of_h(p, h, n=100_001):
    """sigma(h) = int_0^h cosh(s)^{-1/(p-1)} ds by dense Simpson."""
    s = np.linspace(0.0, h, n)
    return _simpson(np.cosh(s) ** (-1.0 / (p - 1.0)), s)


def _escape_guard(p, L):
    """R-threshold marking hyperbolic escape, kept below the overflow
    edge of L^p cosh(R)^{p-1} so the drive stays finite."""
    return float(min(20.0, max(3.0, 0.95 * (700.0 - p * abs(np.log(L))) / (p - 1.0))))


def _rk4_sigma(p, L, state0, sig_span, n_steps, blowup_R=None):
    """RK4 on the flux system over a sigma interval of length sig_span.

    state0 = (R, Phi, s) at the left end.  dPhi/d sigma is independent
    of Phi, so the stepper has no stiffness at small Phi.  Returns
    (sigma_offsets, states, blowup); arrays are truncated once R
    crosses the escape guard or a state stops being finite (the caller
    treats R(h) as +inf in that case).
    """
    ps = p_star(p)
    em = 1.0 / (p - 1.0)
    Lp = L ** p
    if blowup_R is None:
        blowup_R = _escape_guard(p, L)

    def rhs(state):
        R, Phi, s = state
        ch = np.cosh(s)
        return np.array([
            max(Phi, 0.0) ** em,
            Lp * np.cosh(R) ** (p - 1.0) * np.sinh(R) * ch ** (-ps),
            ch ** em,
        ])

    hstep = sig_span / n_steps
    out = np.empty((n_steps + 1, 3))
    state = np.asarray(state0, float)
    out[0] = state
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(n_steps):
            k1 = rhs(state)
            k2 = rhs(state + 0.5 * hstep * k1)
            k3 = rhs(state + 0.5 * hstep * k2)
            k4 = rhs(state + hstep * k3)
            state = state + (hstep / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            out[k + 1] = state
            if state[0] > blowup_R or not np.all(np.isfinite(state)):
                sig = np.linspace(0.0, sig_span, n_steps + 1)[: k + 2]
                states = out[: k + 2]
                if not np.all(np.isfinite(states[-1])):
                    sig, states = sig[:-1], states[:-1]
                return sig, states, True
    return np.linspace(0.0, sig_span, n_steps + 1), out, False


def _hermite_resample(x, y, dy, x_new):
    """Piecewise-cubic Hermite evaluation of (x, y, dy) at x_new.

    x must be strictly increasing; error O(dx^4) for smooth data.
    """
    x = np.asarray(x)
    idx = np.clip(np.searchsorted(x, x_new, side="right") - 1, 0, len(x) - 2)
    x0, x1 = x[idx], x[idx + 1]
    hseg = x1 - x0
    t = np.where(hseg > 0, (x_new - x0) / np.where(hseg > 0, hseg, 1.0), 0.0)
    h00 = (1 + 2 * t) * (1 - t) ** 2
    h10 = t * (1 - t) ** 2
    h01 = t * t * (3 - 2 * t)
    h11 = t * t * (t - 1)
    return (h00 * y[idx] + h10 * hseg * dy[idx]
            + h01 * y[idx + 1] + h11 * hseg * dy[idx + 1])


def _zero_profile(p, L, h, K=1024):
    s = np.linspace(0.0, h, K + 1)
    zeros = np.zeros_like(s)
    return Profile(s=s, R=zeros.copy(), Rprime=zeros.copy(),
                   region=np.full(s.shape, REGION_IVP),
                   meta={"p": p, "L": L, "h": h, "slope0": 0.0, "blowup": False,
                         "R_h": 0.0},
                   sigma_data={"sigma": zeros.copy(), "R": zeros.copy(),
                               "dRdsigma": zeros.copy(), "s": s.copy()})


def solve_ivp_sigma(p, L, slope0, h, n_steps=4096, refine_tol=1e-8,
                    max_steps=2 ** 17, n_out=1024):
    """Shooting IVP for the radial profile, integrated in sigma.

    slope0 = dR/ds(0) >= 0.  slope0 = 0 returns the exact zero profile
    (the flux identity forces R identically 0).  Otherwise the state
    (R, Phi, s) with Phi(0) = slope0^{p-1} is integrated by RK4; the
    step count doubles from n_steps until the resampled profile
    changes by less than refine_tol in sup norm.  Returns a Profile on
    a uniform s-grid with meta["blowup"] = True when R escapes beyond
    the hyperbolic-growth guard before s = h (meta["R_h"] = inf in
    that case).
    """
    if slope0 < 0:
        raise InvariantViolation(f"solve_ivp_sigma: slope0 = {slope0} < 0")
    if p <= 2:
        raise InvariantViolation(f"solve_ivp_sigma: p = {p} must be > 2")
    if slope0 == 0.0:
        return _zero_profile(p, L, h)
    phi0 = float(slope0) ** (p - 1.0)
    if phi0 == 0.0:
        raise InvariantViolation(
            f"solve_ivp_sigma: slope0^(p-1) underflows for slope0 = {slope0}; "
            "the run cannot be distinguished from the zero branch")

    sig_max = sigma_of_h(p, h)
    em = 1.0 / (p - 1.0)

    s_out = np.linspace(0.0, h, n_out + 1)
    prev = None
    n = n_steps
    while True:
        sig, states, blowup = _rk4_sigma(p, L, (0.0, phi0, 0.0), sig_max, n)
        R, s = states[:, 0], states[:, 2]
        dRdsig = np.clip(states[:, 1], 0.0, None) ** em
        if blowup:
            break
        # dR/ds = dR/dsigma / (ds/dsigma) = Phi^{em} cosh(s)^{-em}
        dRds = dRdsig * np.cosh(s) ** (-em)
        R_out = _hermite_resample(s, R, dRds, s_out)
        if prev is not None and float(np.max(np.abs(R_out - prev))) < refine_tol:
            break
        prev = R_out
        if n >= max_steps:
            break
        n *= 2

    meta = {"p": p, "L": L, "h": h, "slope0": float(slope0),
            "blowup": bool(blowup), "n_steps": int(n)}
    if blowup:
        meta["R_h"] = np.inf
        k = len(R)
        s_trunc = s[:k]
        return Profile(s=s_trunc, R=R[:k], Rprime=dRdsig[:k] * np.cosh(s_trunc) ** (-em),
                       region=np.full(k, REGION_IVP), meta=meta,
                       sigma_data={"sigma": sig[:k], "R": R[:k],
                                   "dRdsigma": dRdsig[:k], "s": s_trunc})
    Rp_out = _hermite_resample(s, dRds, np.gradient(dRds, s), s_out)
    meta["R_h"] = float(R_out[-1])
    return Profile(s=s_out, R=R_out, Rprime=Rp_out,
                   region=np.full(s_out.shape, REGION_IVP), meta=meta,
                   sigma_data={"sigma": sig, "R": R, "dRdsigma": dRdsig, "s": s})


def _liftoff_ivp(p, L, s0, h, n_steps, n_out=1024, launch_R=1e-4):
    """Dead-core solution: R = 0 on [0, s0], similarity lift-off at s0.

    Near the lift-off point the degenerate flux law admits the
    similarity branch R = K sig~^gamma, gamma = p/(p-2),
    K = [c0 / ((gamma+1) gamma^{p-1})]^{1/(p-2)} with the drive
    coefficient c0 = L^p cosh(s0)^{-p*} frozen at s0 (sig~ is the local
    sigma variable measured from s0).  Integration launches from that
    branch at R = launch_R: large enough that the similarity corner
    (unbounded higher derivatives at sig~ = 0) stays out of the RK4
    steps, small enough that the frozen-coefficient error ~ O(R
    tanh(s0) sig~_0) is below the step-doubling tolerance.
    """
    em = 1.0 / (p - 1.0)
    gam = p / (p - 2.0)
    c0 = L ** p * np.cosh(s0) ** (-p_star(p))
    K = (c0 / ((gam + 1.0) * gam ** (p - 1.0))) ** (1.0 / (p - 2.0))
    sig0 = (launch_R / K) ** (1.0 / gam)
    R_launch = K * sig0 ** gam
    phi_launch = (gam * K * sig0 ** (gam - 1.0)) ** (p - 1.0)
    s_launch = s0 + np.cosh(s0) ** em * sig0

    ss = np.linspace(s0, h, 20_001)
    sig_total = _simpson(np.cosh(ss) ** (-em), ss)
    sig, states, blowup = _rk4_sigma(
        p, L, (R_launch, phi_launch, s_launch), sig_total - sig0, n_steps)

    # Prepend the exact lift-off node so the sigma samples start at the core.
    sig_loc = np.concatenate([[0.0], sig + sig0])
    R = np.concatenate([[0.0], states[:, 0]])
    dRdsig = np.concatenate([[0.0], np.clip(states[:, 1], 0.0, None) ** em])
    s = np.concatenate([[s0], states[:, 2]])

    meta = {"p": p, "L": L, "h": h, "slope0": 0.0, "s0": float(s0),
            "branch": "dead_core", "blowup": bool(blowup), "n_steps": int(n_steps)}
    if blowup:
        meta["R_h"] = np.inf
        return Profile(s=s, R=R, Rprime=dRdsig * np.cosh(s) ** (-em),
                       region=np.full(len(s), REGION_IVP), meta=meta,
                       sigma_data={"sigma": sig_loc, "R": R,
                                   "dRdsigma": dRdsig, "s": s})

    dRds = dRdsig * np.cosh(s) ** (-em)
    s_out = np.linspace(0.0, h, n_out + 1)
    R_out = np.zeros_like(s_out)
    Rp_out = np.zeros_like(s_out)
    lift = s_out > s0
    R_out[lift] = _hermite_resample(s, R, dRds, s_out[lift])
    Rp_out[lift] = _hermite_resample(s, dRds, np.gradient(dRds, s), s_out[lift])
    region = np.where(lift, REGION_IVP, REGION_FLAT)

    # Global sigma labels (cumulative trapezoid of cosh^{-em} from 0).
    fine = np.linspace(0.0, h, 4097)
    w = np.cosh(fine) ** (-em)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (w[1:] + w[:-1]) * np.diff(fine))])
    core_pts = s_out[s_out < s0]
    meta["R_h"] = float(R[-1])
    return Profile(s=s_out, R=R_out, Rprime=Rp_out, region=region, meta=meta,
                   sigma_data={
                       "sigma": np.concatenate([np.interp(core_pts, fine, cum),
                                                np.interp(s0, fine, cum) + sig_loc]),
                       "R": np.concatenate([np.zeros_like(core_pts), R]),
                       "dRdsigma": np.concatenate([np.zeros_like(core_pts), dRdsig]),
                       "s": np.concatenate([core_pts, s])})


def check_profile_steps(profile: Profile, pairs=100, seed=0, slack=1e-10):
    """Monotonicity and sandwich checks on an IVP profile.

    Uses the sigma samples and the exact sigma-derivative
    R' = Phi^{1/(p-1)}.  For sampled sigma_1 < sigma_2:

      upper: (R'_2)^p - (R'_1)^p <= (1/(p-1)) L^p cosh(s_1)^{-p*}
             [ (cosh R_2)^p - (cosh R_1)^p ],
      lower: the same expression with the weight frozen at s_2 bounds
             the difference from below,

    which follow from integrating the flux law against the monotone
    weight cosh(s)^{-p*}.  Returns a report dict with worst margins
    (>= -slack passes), normalised by max (R'_2)^p.
    """
    sd = profile.sigma_data
    if sd is None:
        raise InvariantViolation("check_profile_steps: profile lacks sigma samples")
    p = profile.meta["p"]
    L = profile.meta["L"]
    ps = p_star(p)
    rng = np.random.default_rng(seed)
    n = len(sd["sigma"])
    i1 = rng.integers(0, n - 1, size=pairs)
    i2 = rng.integers(0, n - 1, size=pairs)
    lo = np.minimum(i1, i2)
    hi = np.maximum(i1, i2) + 1
    R1, R2 = sd["R"][lo], sd["R"][hi]
    s1, s2 = sd["s"][lo], sd["s"][hi]
    d1, d2 = sd["dRdsigma"][lo], sd["dRdsigma"][hi]

    fac = (1.0 / (p - 1.0)) * L ** p
    dcosh = np.cosh(R2) ** p - np.cosh(R1) ** p
    upper = fac * np.cosh(s1) ** (-ps) * dcosh - (d2 ** p - d1 ** p)
    lower = (d2 ** p - d1 ** p) - fac * np.cosh(s2) ** (-ps) * dcosh
    scale = max(1.0, float(np.max(d2 ** p)))
    mono_R = float(np.min(np.diff(sd["R"])))
    mono_d = float(np.min(np.diff(sd["dRdsigma"])))
    report = {
        "nonneg_R": float(np.min(sd["R"])),
        "monotone_R": mono_R,
        "monotone_Rprime_sigma": mono_d,
        "upper_margin": float(np.min(upper)) / scale,
        "lower_margin": float(np.min(lower)) / scale,
        "pairs": int(pairs),
    }
    report["passed"] = bool(
        report["nonneg_R"] >= -slack and mono_R >= -slack * scale
        and mono_d >= -slack * scale
        and report["upper_margin"] >= -slack and report["lower_margin"] >= -slack)
    return report


def weak_form_residual(profile: Profile, p, L, n_test=3):
    """Relative weak-form residual of the flux law on the s-grid:

        int ( W phi' + L^p (cosh R/cosh s)^{p-1} sinh R phi ) ds -> 0

    for test functions phi = sin(k pi s/h) vanishing at both ends,
    W = cosh s (R')^{p-1}."""
    s, R, Rp = profile.s, profile.R, profile.Rprime
    h = float(s[-1])
    W = np.cosh(s) * np.abs(Rp) ** (p - 1.0) * np.sign(Rp)
    drive = L ** p * (np.cosh(R) / np.cosh(s)) ** (p - 1.0) * np.sinh(R)
    worst = 0.0
    for k in range(1, n_test + 1):
        phi = np.sin(k * np.pi * s / h)
        dphi = (k * np.pi / h) * np.cos(k * np.pi * s / h)
        resid = _simpson(W * dphi + drive * phi, s)
        scale = _simpson(np.abs(W * dphi) + np.abs(drive * phi), s)
        worst = max(worst, abs(resid) / max(scale, 1e-300))
    return worst


def shoot_dirichlet(p, L, h, R0_target, max_iter=200, tol=1e-10,
                    slope_hi_factor=10.0):
    """Solve the two-point problem R(0) = 0, R(h) = R0_target.

    Two shooting branches cover the attainable range.  As slope0
    decreases, R(h) decreases only to the similarity-envelope value
    (lift-off of the degenerate flux law), not to 0:

      * targets at or above the envelope value: bisection on slope0 in
        [slope_eps, 10 L];
      * targets below it: dead-core solutions, bisection on the
        lift-off point s0 in [0, h) (R = 0 on [0, s0], similarity
        launch after; R(h) decreases monotonically in s0).

    The step count is converged first (doubling until the resampled
    profile is stable) and the bisection then runs on that fixed
    discretization, so the returned discrete solution hits the target
    within tol exactly as stated.  Raises NoBracket when R0_target
    exceeds the slope-branch maximum at slope0 = 10 L.
    """
    if not (0.0 < R0_target <= h):
        raise InvariantViolation(
            f"shoot_dirichlet: R0_target = {R0_target} outside (0, h]")

    def R_h(slope, n_steps=None):
        prof = solve_ivp_sigma(p, L, slope, h, **({} if n_steps is None else
                                                  {"n_steps": n_steps, "max_steps": n_steps}))
        return prof.meta["R_h"], prof

    # Freeze the discretization at the probe slope's converged step count.
    probe_slope = min(max(R0_target / h, 1e-3), slope_hi_factor * L)
    _, probe = R_h(probe_slope)
    n_fixed = probe.meta["n_steps"]

    # Slope-branch infimum: the smallest representable slope already sits
    # on the lift-off envelope.
    slope_eps = 10.0 ** (-280.0 / (p - 1.0))
    env_val, env_prof = R_h(slope_eps, n_fixed)

    if np.isfinite(env_val) and R0_target >= env_val:
        lo, hi = slope_eps, slope_hi_factor * L
        f_hi_val, _ = R_h(hi, n_fixed)
        if f_hi_val < R0_target:
            raise NoBracket(
                f"shoot_dirichlet: R(h) max {f_hi_val:.6g} < target {R0_target}",
                attained=(0.0, f_hi_val))
        val, prof = env_val, env_prof
        for _ in range(max_iter):
            if abs(val - R0_target) < tol:
                break
            mid = 0.5 * (lo + hi)
            val, prof = R_h(mid, n_fixed)
            if not np.isfinite(val) or val > R0_target:
                hi = mid
            else:
                lo = mid
        else:
            if abs(val - R0_target) > 100 * tol:
                raise NoBracket(
                    f"shoot_dirichlet: bisection stalled at R(h) = {val:.12g}",
                    attained=(val, val))
        prof.meta["branch"] = "slope"
    else:
        # Converge the step count at a mid-collar lift-off probe.
        n_dc, prev = 4096, None
        while True:
            pr = _liftoff_ivp(p, L, 0.5 * h, h, n_dc)
            if (not pr.meta["blowup"] and prev is not None
                    and float(np.max(np.abs(pr.R - prev))) < 1e-8):
                break
            prev = None if pr.meta["blowup"] else pr.R
            if n_dc >= 2 ** 17:
                break
            n_dc *= 2
        lo_s, hi_s = 0.0, h * (1.0 - 1e-12)
        val, prof = np.inf, None
        for _ in range(max_iter):
            mid = 0.5 * (lo_s + hi_s)
            prof = _liftoff_ivp(p, L, mid, h, n_dc)
            val = prof.meta["R_h"]
            if abs(val - R0_target) < tol:
                break
            if not np.isfinite(val) or val > R0_target:
                lo_s = mid
            else:
                hi_s = mid
        else:
            if abs(val - R0_target) > 100 * tol:
                raise NoBracket(
                    f"shoot_dirichlet: lift-off bisection stalled at R(h) = {val:.12g}",
                    attained=(val, val))
    prof.meta["slope0_shot"] = prof.meta["slope0"]
    prof.meta["R0_target"] = float(R0_target)
    prof.meta["weak_residual"] = float(weak_form_residual(prof, p, L))
    return prof


# ---------------------------------------------------------------------------
# p -> infinity limit profile
# ---------------------------------------------------------------------------

def _match_point(s_star, L, h):
    """First root after s* of cosh(a (s - s*))/cosh s = 1/cosh s*,
    a = L/cosh s*.  phi(s*) = 0 with negative derivative, so the
    matching point is where phi returns to zero; None if no crossing
    before h."""
    a = L / np.cosh(s_star)

    def phi(s):
        return np.cosh(a * (s - s_star)) / np.cosh(s) - 1.0 / np.cosh(s_star)

    step = max((h - s_star) / 4096.0, 1e-9)
    s_prev = s_star + step
    if phi(s_prev) >= 0.0:
        # Immediate re-crossing: dip is below resolution; match at s*.
        return s_prev
    s_cur = s_prev
    while s_cur < h:
        s_cur = min(s_cur + step, h)
        if phi(s_cur) >= 0.0:
            lo, hi = s_cur - step, s_cur
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                if phi(mid) >= 0.0:
                    hi = mid
                else:
                    lo = mid
            return 0.5 * (lo + hi)
        if s_cur >= h:
            break
    return None


def limit_profile(s_star, L, h, K=4096):
    """Piecewise p -> infinity profile on [0, h].

    R = 0 on [0, s*]; linear with slope a = L/cosh(s*) on [s*, s~];
    then the growth law R' = L cosh R/cosh s integrated by RK4.  The
    matching point s~ solves cosh R(s~)/cosh s~ = 1/cosh s*.  If no
    matching point exists below h the profile is flat/linear only
    (meta["matched"] = False).
    """
    if not (0.0 < s_star < h):
        raise InvariantViolation(f"limit_profile: s_star = {s_star} outside (0, h)")
    s = np.linspace(0.0, h, K + 1)
    R = np.zeros_like(s)
    Rp = np.zeros_like(s)
    region = np.full(s.shape, REGION_FLAT)
    a = L / np.cosh(s_star)

    s_tilde = _match_point(s_star, L, h)
    matched = s_tilde is not None
    lin_end = s_tilde if matched else h

    lin = (s > s_star) & (s <= lin_end)
    R[lin] = a * (s[lin] - s_star)
    Rp[lin] = a
    region[lin] = REGION_LINEAR

    if matched:
        grow = s > s_tilde
        idx = np.nonzero(grow)[0]
        if idx.size:
            # RK4 on R' = L cosh R / cosh s from (s_tilde, a (s_tilde - s*)).
            def f(ss, RR):
                return L * np.cosh(RR) / np.cosh(ss)

            Rc = a * (s_tilde - s_star)
            sc = s_tilde
            for i in idx:
                hstep = s[i] - sc
                k1 = f(sc, Rc)
                k2 = f(sc + 0.5 * hstep, Rc + 0.5 * hstep * k1)
                k3 = f(sc + 0.5 * hstep, Rc + 0.5 * hstep * k2)
                k4 = f(sc + hstep, Rc + hstep * k3)
                Rc = Rc + (hstep / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
                sc = s[i]
                R[i] = Rc
                Rp[i] = f(sc, Rc)
                region[i] = REGION_GROWTH

    meta = {"L": L, "h": h, "s_star": float(s_star), "a": float(a),
            "s_tilde": (float(s_tilde) if matched else None),
            "matched": bool(matched), "R_h": float(R[-1])}
    return Profile(s=s, R=R, Rprime=Rp, region=region, meta=meta)


def check_limit_bullets(profile: Profile, L, pairs=200, seed=0, slack=1e-10):
    """The limit proposition's pointwise bounds on sampled s1 < s2:

        R' >= 0 (non-decreasing),  R = |R| sign s,
        R'(s2) <= max{ R'(s1), L [cosh R(s2)] / cosh s1 },
        R'(s2) >= max{ R'(s1), L [cosh R(s2)] / cosh s2 },

    where [cosh R] = cosh R except [cosh 0] = 0 (the bracket switches
    off the bound on the flat branch)."""
    rng = np.random.default_rng(seed)
    n = len(profile.s)
    i1 = rng.integers(0, n - 1, size=pairs)
    i2 = rng.integers(0, n - 1, size=pairs)
    lo = np.minimum(i1, i2)
    hi = np.maximum(i1, i2) + 1
    s1, s2 = profile.s[lo], profile.s[hi]
    R2 = profile.R[hi]
    d1, d2 = profile.Rprime[lo], profile.Rprime[hi]
    bracket = np.where(np.abs(R2) < 1e-14, 0.0, np.cosh(R2))
    ub = np.maximum(d1, L * bracket / np.cosh(s1))
    lb = np.maximum(d1, L * bracket / np.cosh(s2))
    # d2 >= lb requires d2 >= d1 (monotone) and d2 >= L[cosh R2]/cosh s2.
    upper_margin = float(np.min(ub - d2))
    lower_margin = float(np.min(d2 - lb))
    report = {
        "upper_margin": upper_margin,
        "lower_margin": lower_margin,
        "odd_extension": True,   # stored half is >= 0; R(-s) := -R(s)
        "monotone_Rprime": float(np.min(np.diff(profile.Rprime))),
        "pairs": int(pairs),
        "passed": bool(upper_margin >= -slack and lower_margin >= -slack
                       and np.min(profile.Rprime) >= -slack),
    }
    return report


def limit_boundary_map(L, h, n=33, s_star_min=None, s_star_max=None):
    """Tabulate s* -> R(h) of the limit profile (reported monotone
    decreasing; used to invert boundary data numerically)."""
    lo = s_star_min if s_star_min is not None else 0.02 * h
    hi = s_star_max if s_star_max is not None else 0.98 * h
    stars = np.linspace(lo, hi, n)
    vals = np.array([limit_profile(ss, L, h).meta["R_h"] for ss in stars])
    return stars, vals


def limit_profile_for_boundary(R0, L, h, tol=1e-9, max_iter=200):
    """Invert the boundary map: the limit profile with R(h) = R0.

    Bisection on s*, using the tabulated monotone-decreasing map;
    NoBracket if R0 is outside the attainable range.
    """
    lo, hi = 1e-6 * h, (1.0 - 1e-6) * h
    R_lo = limit_profile(lo, L, h).meta["R_h"]
    R_hi = limit_profile(hi, L, h).meta["R_h"]
    if not (R_hi <= R0 <= R_lo):
        raise NoBracket(
            f"limit_profile_for_boundary: R0 = {R0} outside [{R_hi:.3e}, {R_lo:.3e}]",
            attained=(R_hi, R_lo))
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        prof = limit_profile(mid, L, h)
        gap = prof.meta["R_h"] - R0
        if abs(gap) < tol:
            return prof
        if gap > 0.0:
            lo = mid
        else:
            hi = mid
    return limit_profile(0.5 * (lo + hi), L, h)


# ---------------------------------------------------------------------------
# Ideal comparison profile
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IdealMapParams:
    """Piecewise-linear comparison profile parameters.

    h: collar half-width; h0: lamination scale with 3h <= h0 (the
    regions [h, 3h] and [3h, h0] must fit); K0 < L: Lipschitz constant
    off the lamination; L > 1: target stretch.  Derived slope
    k = (h0 + 2h)/h0 must satisfy 1 < k <= sqrt(L/K0).
    """

    h: float
    h0: float
    K0: float
    L: float

    @property
    def k(self):
        return (self.h0 + 2.0 * self.h) / self.h0

    def __post_init__(self):
        if not (0.0 < self.h and 3.0 * self.h <= self.h0):
            raise InvariantViolation(
                f"IdealMapParams: need 0 < h and 3h <= h0 (h={self.h}, h0={self.h0})")
        if not (self.L > 1.0 and 0.0 < self.K0 < self.L):
            raise InvariantViolation(
                f"IdealMapParams: need 0 < K0 < L and L > 1 (K0={self.K0}, L={self.L})")
        if not (1.0 < self.k <= np.sqrt(self.L / self.K0) + 1e-15):
            raise InvariantViolation(
                f"IdealMapParams: k = {self.k:.6f} outside (1, sqrt(L/K0) = "
                f"{np.sqrt(self.L / self.K0):.6f}]")


def ideal_map_profile(params: IdealMapParams, n_grid=10_000):
    """Piecewise-linear profile of the ideal comparison map on [0, 2 h0].

        region a: R = 0                 on [0, h]
        region b: R = (s - h)/2         on [h, 3h]
        region c: R = s - 2h            on [3h, h0]
        region d: R = k (s - h0) + h0 - 2h   on [h0, 2 h0]

    Continuous, with R(2 h0) = 2 h0.  The report carries per-region
    maxima of the differential eigenvalues (R'(s), cosh R/cosh s), the
    claimed bounds (b: max(1/2, 1/cosh h); c: 1; d: k), and the overall
    off-collar stretch max{k_h L, K*, k K0} with K* = K0, checked < L.
    """
    h, h0, K0, L, k = params.h, params.h0, params.K0, params.L, params.k
    s = np.linspace(0.0, 2.0 * h0, n_grid + 1)
    R = np.zeros_like(s)
    Rp = np.zeros_like(s)
    region = np.full(s.shape, "a", dtype="<U1")

    b = (s > h) & (s <= 3.0 * h)
    R[b] = 0.5 * (s[b] - h)
    Rp[b] = 0.5
    region[b] = "b"
    c = (s > 3.0 * h) & (s <= h0)
    R[c] = s[c] - 2.0 * h
    Rp[c] = 1.0
    region[c] = "c"
    d = s > h0
    R[d] = k * (s[d] - h0) + h0 - 2.0 * h
    Rp[d] = k
    region[d] = "d"

    conf = np.cosh(R) / np.cosh(s)
    eig_max = np.maximum(Rp, conf)
    k_h = max(0.5, 1.0 / np.cosh(h))
    bounds = {"a": 1.0, "b": k_h, "c": 1.0, "d": k}
    report = {"k": float(k), "k_h": float(k_h), "regions": {}}
    ok = True
    for name in "abcd":
        mask = region == name
        if not np.any(mask):
            continue
        worst = float(np.max(eig_max[mask]))
        report["regions"][name] = {"max_eig": worst, "bound": float(bounds[name]),
                                   "ok": bool(worst <= bounds[name] + 1e-12)}
        ok = ok and report["regions"][name]["ok"]
    overall = max(k_h * L, K0, k * K0)
    report["overall_stretch"] = float(overall)
    report["overall_ok"] = bool(overall < L)
    report["continuity_max_jump"] = float(np.max(np.abs(np.diff(R))) / (s[1] - s[0]))
    report["R_end"] = float(R[-1])
    report["passed"] = bool(ok and report["overall_ok"]
                            and abs(R[-1] - 2.0 * h0) < 1e-10)

    prof = Profile(s=s, R=R, Rprime=Rp, region=region,
                   meta={"params": {"h": h, "h0": h0, "K0": K0, "L": L, "k": k}})
    return prof, report
