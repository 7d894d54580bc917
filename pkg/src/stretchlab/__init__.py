"""stretchlab: a numerical laboratory for Schatten p-harmonic maps from
a hyperbolic collar into the hyperbolic plane and their p -> infinity
(best Lipschitz) limits.

Layers, bottom up:

    minkowski   : R^{2,1} geometry kernel (hyperboloid model, so(2,1))
    svnorm      : Schatten-von Neumann calculus on 2-frame tangent maps
                  and the pointwise inequality suites
    cylinder    : discretized collar [-h, h] x (R / d Z) with metric
                  ds^2 + cosh^2 s dt^2, holonomy seam, discrete calculus
    jp_solver   : J_p = int Tr Q(du)^p minimization, Euler-Lagrange and
                  Noether-current diagnostics
    profile_ode : separated-variable radial profiles, shooting, and the
                  p = infinity limit profiles
    psweep      : warm-started p-sweeps and normalized measures
    cli/report  : command line front end and figure rendering
"""

from ._version import __version__
from .errors import (DegenerateMap, InvariantViolation, LineSearchFailed,
                     NoBracket, StretchLabError)
from . import minkowski
from .svnorm import (TangentMap, check_norm_properties, check_pointwise_suite,
                     first_variation_kernel, gram, s_q, singular_values, sv_norm)
from .cylinder import (Cylinder, GridMap, discrete_differential, embed_grid,
                       embed_profile, quadrature, target_chart, target_embed)
from .jp_solver import (J_p, SolveResult, SolverOptions, convexity_check,
                        dual_stationarity_check, el_residual, grad_Jp, minimize,
                        noether_current)
from .profile_ode import (IdealMapParams, Profile, ideal_map_profile,
                          limit_profile, shoot_dirichlet, solve_ivp_sigma)
from .psweep import (PrimitiveSample, SweepRecord, concentration, density_S,
                     kappa, primitive_vq, sweep)

__all__ = [
    "__version__",
    "StretchLabError", "InvariantViolation", "NoBracket", "LineSearchFailed",
    "DegenerateMap",
    "minkowski",
    "TangentMap", "gram", "singular_values", "sv_norm", "s_q",
    "first_variation_kernel", "check_norm_properties", "check_pointwise_suite",
    "Cylinder", "GridMap", "target_embed", "target_chart", "embed_grid",
    "embed_profile", "discrete_differential", "quadrature",
    "SolverOptions", "SolveResult", "J_p", "grad_Jp", "el_residual", "minimize",
    "noether_current", "dual_stationarity_check", "convexity_check",
    "Profile", "solve_ivp_sigma", "shoot_dirichlet", "limit_profile",
    "IdealMapParams", "ideal_map_profile",
    "SweepRecord", "PrimitiveSample", "kappa", "density_S", "concentration",
    "sweep", "primitive_vq",
]
