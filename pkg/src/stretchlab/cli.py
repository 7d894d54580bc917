"""Command-line front end.

Subcommands
    svcheck  : Schatten-norm property suite and pointwise-inequality
               suite over random instances; JSON report.
    solve    : J_p minimization on the collar grid; JSON result plus a
               node-grid CSV dump.
    ode      : separated-variable radial profiles (shooting, plain IVP,
               or p = infinity limit profile); CSV (s, R, Rprime, region).
    sweep    : warm-started p-sweep; sweep.json plus per-p density CSVs.
    idealmap : piecewise ideal-map profile and its per-region stretch
               bounds; JSON report.
    report   : render figures (PNG) from solve / sweep / ode outputs.

Exit codes: 0 success, 1 validation error (bad flags, bad config,
geometry constraints), 2 numerical failure (line search, no shooting
bracket, failed suite) with partial results flushed.

Every output embeds the tool version and a sha256 hash of the resolved
configuration.  All randomness sits behind one seeded generator per
command, so identical invocations produce byte-identical outputs.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys

import numpy as np

from ._version import __version__
from . import profile_ode, psweep, report as report_mod
from .cylinder import Cylinder, cellfield_to_csv, gridmap_to_csv
from .errors import (DegenerateMap, InvariantViolation, LineSearchFailed,
                     NoBracket, StretchLabError)
from .jp_solver import BC_DIRICHLET, BC_NEUMANN, SolverOptions, minimize
from .svnorm import check_norm_properties, check_pointwise_suite

GEOM_KEYS = {"h": float, "d": float, "L": float, "Ns": int, "Nt": int}
SOLVER_KEYS = {"p": float, "p_list": list, "bc": str, "grad_tol": float,
               "max_iters": int, "step0": float, "seed": int,
               "init_amplitude": float, "R0": float}
OUTPUT_KEYS = {"out": str, "density_dir": str, "map_out": str}


class _Parser(argparse.ArgumentParser):
    """argparse maps usage errors to exit 2; here 2 means numerical
    failure, so usage/validation problems exit 1 instead."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def _check_block(block, allowed, where):
    if not isinstance(block, dict):
        raise InvariantViolation(f"config: {where} must be an object")
    unknown = sorted(set(block) - set(allowed))
    if unknown:
        raise InvariantViolation(f"config: unknown {where} keys {unknown}")
    out = {}
    for k, v in block.items():
        want = allowed[k]
        if want is list:
            if not isinstance(v, (list, tuple)):
                raise InvariantViolation(f"config: {where}.{k} must be a list")
            out[k] = [float(x) for x in v]
        else:
            try:
                out[k] = want(v)
            except (TypeError, ValueError) as exc:
                raise InvariantViolation(f"config: bad value for {where}.{k}: {v}") \
                    from exc
    return out


def load_config(path):
    """JSON config: either a flat geometry object {h, d, L, Ns, Nt} or
    blocks {"geometry": ..., "solver": ..., "output": ...}.  Unknown
    keys are rejected."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise InvariantViolation(f"config: cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InvariantViolation(f"config: {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise InvariantViolation("config: top level must be an object")
    if set(raw) <= set(GEOM_KEYS):
        return {"geometry": _check_block(raw, GEOM_KEYS, "geometry"),
                "solver": {}, "output": {}}
    unknown = sorted(set(raw) - {"geometry", "solver", "output"})
    if unknown:
        raise InvariantViolation(f"config: unknown top-level keys {unknown}")
    return {"geometry": _check_block(raw.get("geometry", {}), GEOM_KEYS, "geometry"),
            "solver": _check_block(raw.get("solver", {}), SOLVER_KEYS, "solver"),
            "output": _check_block(raw.get("output", {}), OUTPUT_KEYS, "output")}


def _merge_flags(cfg, args, geom=(), solver=()):
    """Command-line flags override config-file values."""
    for k in geom:
        v = getattr(args, k, None)
        if v is not None:
            cfg["geometry"][k] = GEOM_KEYS[k](v)
    for k in solver:
        v = getattr(args, k, None)
        if v is not None:
            cfg["solver"][k] = v
    return cfg


def _require_geometry(cfg):
    missing = sorted(set(GEOM_KEYS) - set(cfg["geometry"]))
    if missing:
        raise InvariantViolation(f"config: missing geometry keys {missing}")
    g = cfg["geometry"]
    return Cylinder(h=g["h"], d=g["d"], L=g["L"], Ns=g["Ns"], Nt=g["Nt"])


def config_hash(cfg):
    return hashlib.sha256(
        json.dumps(cfg, sort_keys=True, separators=(",", ":")).encode()).hexdigest()


def _provenance(cfg):
    h = config_hash(cfg)
    return ({"version": __version__, "config_hash": h},
            f"stretchlab {__version__} config_hash={h}")


def _jsonable(o):
    if isinstance(o, dict):
        return {str(k): _jsonable(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_jsonable(v) for v in o]
    if isinstance(o, np.ndarray):
        return _jsonable(o.tolist())
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, float) and not np.isfinite(o):
        return repr(o)
    return o


def write_json(path, doc):
    text = json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n"
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        with open(path, "w") as fh:
            fh.write(text)


def _apply_threads(args):
    n = args.threads
    if n is None:
        n = os.environ.get("STRETCHLAB_THREADS")
    if getattr(args, "deterministic", False):
        n = 1  # fixed reduction order: keep all BLAS kernels serial
    if n is not None:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(int(n))


def _parse_float_list(text):
    try:
        return [float(x) for x in str(text).split(",") if x.strip() != ""]
    except ValueError as exc:
        raise InvariantViolation(f"bad numeric list: {text!r}") from exc


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_svcheck(args):
    p_list = _parse_float_list(args.p_list)
    cfg = {"svcheck": {"trials": args.trials, "p_list": p_list, "seed": args.seed}}
    prov, _ = _provenance(cfg)
    norms = check_norm_properties(trials=args.trials, p_list=p_list, seed=args.seed)
    point = check_pointwise_suite(trials=args.trials, p_list=p_list, seed=args.seed)
    ok = norms.all_pass() and point.all_pass()
    doc = dict(prov, config=cfg, all_pass=ok,
               norm_properties=norms.to_dict(), pointwise=point.to_dict())
    write_json(args.out, doc)
    return 0 if ok else 2


def cmd_solve(args):
    cfg = load_config(args.config) if args.config else {"geometry": {}, "solver": {},
                                                        "output": {}}
    _merge_flags(cfg, args, geom=GEOM_KEYS,
                 solver=("p", "bc", "grad_tol", "max_iters", "seed",
                         "init_amplitude", "R0", "step0"))
    cyl = _require_geometry(cfg)
    sol = cfg["solver"]
    if "p" not in sol:
        raise InvariantViolation("solve: p is required (flag --p or solver block)")
    bc = sol.get("bc", BC_NEUMANN)
    opts = SolverOptions(p=sol["p"], bc=bc,
                         grad_tol=sol.get("grad_tol", 1e-7),
                         max_iters=sol.get("max_iters", 5000),
                         step0=sol.get("step0", 1e-2),
                         seed=sol.get("seed", 0))
    R0 = sol.get("R0", 0.0)
    if bc == BC_NEUMANN and R0 != 0.0:
        raise InvariantViolation("solve: R0 is only meaningful with --bc dirichlet")
    init = psweep.default_init(cyl, amplitude=sol.get("init_amplitude", 0.02),
                               seed=opts.seed, R0=R0)

    prov, comment = _provenance(cfg)
    out = args.out
    out_dir = os.path.dirname(os.path.abspath(out)) if out != "-" else os.getcwd()
    map_csv = args.map_out or cfg["output"].get("map_out") or os.path.join(
        out_dir, (os.path.splitext(os.path.basename(out))[0] if out != "-"
                  else "solve") + "_map.csv")

    err = None
    try:
        result = minimize(init, cyl, opts)
    except LineSearchFailed as exc:
        result, err = exc.result, str(exc)
    code = 0 if result.converged else 2

    os.makedirs(os.path.dirname(os.path.abspath(map_csv)), exist_ok=True)
    gridmap_to_csv(map_csv, cyl, result.u, comment=comment)
    try:
        map_ref = os.path.relpath(map_csv, out_dir)
    except ValueError:
        map_ref = os.path.abspath(map_csv)
    doc = dict(prov, config=cfg, p=opts.p, bc=bc, Jp=result.Jp,
               el_residual=result.el_residual, iters=result.iters,
               converged=result.converged, error=err, map_csv=map_ref,
               j_history=list(result.j_history))
    write_json(out, doc)
    return code


def _profile_to_csv(path, prof, comment=None):
    import csv as _csv
    with open(path, "w", newline="") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        wr = _csv.writer(fh)
        wr.writerow(["s", "R", "Rprime", "region"])
        for k in range(prof.s.size):
            wr.writerow([repr(float(prof.s[k])), repr(float(prof.R[k])),
                         repr(float(prof.Rprime[k])), str(prof.region[k])])


def cmd_ode(args):
    modes = [m for m, picked in (("shoot", args.dirichlet_R0 is not None),
                                 ("ivp", args.slope0 is not None),
                                 ("limit", args.limit)) if picked]
    if len(modes) != 1:
        raise InvariantViolation(
            "ode: exactly one of --dirichlet-R0, --slope0, --limit is required")
    mode = modes[0]
    cfg = {"ode": {"mode": mode, "p": args.p, "L": args.L, "h": args.h,
                   "dirichlet_R0": args.dirichlet_R0, "slope0": args.slope0,
                   "s_star": args.s_star}}
    prov, comment = _provenance(cfg)

    summary = dict(prov, config=cfg)
    try:
        if mode == "shoot":
            if args.p is None:
                raise InvariantViolation("ode: --p is required for shooting")
            prof = profile_ode.shoot_dirichlet(args.p, args.L, args.h,
                                               args.dirichlet_R0)
        elif mode == "ivp":
            if args.p is None:
                raise InvariantViolation("ode: --p is required for the IVP")
            prof = profile_ode.solve_ivp_sigma(args.p, args.L, args.slope0, args.h)
        else:
            if args.s_star is None:
                raise InvariantViolation("ode: --limit requires --s-star")
            prof = profile_ode.limit_profile(args.s_star, args.L, args.h)
    except NoBracket as exc:
        summary["error"] = str(exc)
        summary["attained"] = getattr(exc, "attained", None)
        write_json(None, summary)
        return 2

    _profile_to_csv(args.out, prof, comment=comment)
    summary["out"] = args.out
    summary["meta"] = {k: v for k, v in prof.meta.items()
                       if isinstance(v, (int, float, bool, str))}
    write_json(None, summary)
    return 0


def cmd_sweep(args):
    cfg = load_config(args.config) if args.config else {"geometry": {}, "solver": {},
                                                        "output": {}}
    _merge_flags(cfg, args, geom=GEOM_KEYS,
                 solver=("grad_tol", "max_iters", "seed", "step0", "init_amplitude"))
    if args.p is not None:
        cfg["solver"]["p_list"] = _parse_float_list(args.p)
    cyl = _require_geometry(cfg)
    sol = cfg["solver"]
    p_list = sol.get("p_list")
    if not p_list:
        raise InvariantViolation("sweep: p list is required (flag --p or solver block)")
    eps_list = _parse_float_list(args.eps) if args.eps else list(psweep.EPS_LIST_DEFAULT)

    opts = SolverOptions(p=4.0, bc=BC_NEUMANN,
                         grad_tol=sol.get("grad_tol", 1e-9),
                         max_iters=sol.get("max_iters", 20000),
                         step0=sol.get("step0", 1e-2),
                         seed=sol.get("seed", 0))
    init = psweep.default_init(cyl, amplitude=sol.get("init_amplitude", 0.02),
                               seed=opts.seed)

    prov, comment = _provenance(cfg)
    density_dir = args.density_dir or cfg["output"].get("density_dir") \
        or os.path.join(os.path.dirname(os.path.abspath(args.out or "sweep.json")),
                        "densities")
    records, maps = psweep.sweep(p_list, cyl, opts, eps_list=eps_list, init=init,
                                 store_maps=True)
    os.makedirs(density_dir, exist_ok=True)
    for rec, u in zip(records, maps):
        dens = psweep.density_S(u, cyl, rec.p, rec.kappa_p)
        cellfield_to_csv(os.path.join(density_dir, f"density_p{rec.p:g}.csv"),
                         cyl, {"density": dens}, comment=comment)
        gridmap_to_csv(os.path.join(density_dir, f"map_p{rec.p:g}.csv"),
                       cyl, u, comment=comment)

    doc = dict(prov, config=cfg, eps_list=eps_list, density_dir=density_dir,
               records=[r.to_dict() for r in records])
    write_json(args.out, doc)
    return 2 if any(r.error or not r.converged for r in records) else 0


def cmd_idealmap(args):
    params = profile_ode.IdealMapParams(h=args.h, h0=args.h0, K0=args.K0, L=args.L)
    cfg = {"idealmap": {"h": args.h, "h0": args.h0, "K0": args.K0, "L": args.L,
                        "n_grid": args.n_grid}}
    prov, comment = _provenance(cfg)
    prof, rep = profile_ode.ideal_map_profile(params, n_grid=args.n_grid)
    if args.profile_out:
        _profile_to_csv(args.profile_out, prof, comment=comment)
    doc = dict(prov, config=cfg, report=rep,
               profile_out=args.profile_out)
    write_json(args.out, doc)
    return 0 if rep["passed"] else 2


def cmd_report(args):
    if not (args.solve or args.sweep or args.profile):
        raise InvariantViolation(
            "report: pass at least one of --solve, --sweep, --profile")
    index = report_mod.render(args.out_dir, solve=args.solve, sweep=args.sweep,
                              profile=args.profile, density_dir=args.density_dir)
    sys.stdout.write(json.dumps(index, indent=2, sort_keys=True) + "\n")
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--threads", type=int, default=None,
                        help="BLAS thread cap (env STRETCHLAB_THREADS as fallback)")
    common.add_argument("--deterministic", action="store_true",
                        help="force single-threaded fixed-order reductions")

    ap = _Parser(prog="stretchlab",
                 description="numerical laboratory for Schatten p-harmonic maps "
                             "into the hyperbolic plane")
    ap.add_argument("--version", action="version", version=f"stretchlab {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("svcheck", parents=[common],
                       help="norm-property and pointwise-inequality suites")
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--p-list", default="4,6,10")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="JSON path (default: stdout)")
    p.set_defaults(func=cmd_svcheck)

    p = sub.add_parser("solve", parents=[common], help="minimize J_p on the collar")
    p.add_argument("--config", help="geometry/solver JSON")
    for k in GEOM_KEYS:
        p.add_argument(f"--{k}", type=float if GEOM_KEYS[k] is float else int)
    p.add_argument("--p", type=float)
    p.add_argument("--bc", choices=[BC_NEUMANN, BC_DIRICHLET])
    p.add_argument("--R0", type=float, help="Dirichlet boundary R(+-h) = +-R0")
    p.add_argument("--grad-tol", dest="grad_tol", type=float)
    p.add_argument("--max-iters", dest="max_iters", type=int)
    p.add_argument("--step0", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--init-amplitude", dest="init_amplitude", type=float)
    p.add_argument("--out", required=True, help="result JSON path ('-' for stdout)")
    p.add_argument("--map-out", dest="map_out", help="node grid CSV path")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("ode", parents=[common], help="radial profile ODE")
    p.add_argument("--p", type=float)
    p.add_argument("--L", type=float, required=True)
    p.add_argument("--h", type=float, required=True)
    p.add_argument("--dirichlet-R0", dest="dirichlet_R0", type=float,
                   help="shoot for R(h) = R0")
    p.add_argument("--slope0", type=float, help="plain IVP with R'(0) = slope0")
    p.add_argument("--limit", action="store_true", help="p = infinity limit profile")
    p.add_argument("--s-star", dest="s_star", type=float,
                   help="corner location for --limit")
    p.add_argument("--out", required=True, help="profile CSV path")
    p.set_defaults(func=cmd_ode)

    p = sub.add_parser("sweep", parents=[common], help="p -> infinity sweep")
    p.add_argument("--config", help="geometry/solver JSON")
    for k in GEOM_KEYS:
        p.add_argument(f"--{k}", type=float if GEOM_KEYS[k] is float else int)
    p.add_argument("--p", help="comma-separated increasing p list")
    p.add_argument("--eps", help="comma-separated concentration radii")
    p.add_argument("--grad-tol", dest="grad_tol", type=float)
    p.add_argument("--max-iters", dest="max_iters", type=int)
    p.add_argument("--step0", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--init-amplitude", dest="init_amplitude", type=float)
    p.add_argument("--out", required=True, help="sweep JSON path")
    p.add_argument("--density-dir", dest="density_dir",
                   help="directory for per-p density CSVs")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("idealmap", parents=[common],
                       help="piecewise ideal-map stretch bounds")
    p.add_argument("--h0", type=float, required=True)
    p.add_argument("--h", type=float, required=True)
    p.add_argument("--L", type=float, required=True)
    p.add_argument("--K0", type=float, required=True)
    p.add_argument("--n-grid", dest="n_grid", type=int, default=10_000)
    p.add_argument("--out", default=None, help="JSON path (default: stdout)")
    p.add_argument("--profile-out", dest="profile_out", help="profile CSV path")
    p.set_defaults(func=cmd_idealmap)

    p = sub.add_parser("report", parents=[common],
                       help="render figures from existing outputs")
    p.add_argument("--solve", help="result JSON from 'solve'")
    p.add_argument("--sweep", help="sweep JSON from 'sweep'")
    p.add_argument("--profile", help="profile CSV from 'ode'")
    p.add_argument("--density-dir", dest="density_dir")
    p.add_argument("--out-dir", dest="out_dir", required=True)
    p.set_defaults(func=cmd_report)
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    _apply_threads(args)
    try:
        return args.func(args)
    except InvariantViolation as exc:
        sys.stderr.write(f"stretchlab: validation error: {exc}\n")
        return 1
    except (LineSearchFailed, NoBracket, DegenerateMap) as exc:
        sys.stderr.write(f"stretchlab: numerical failure: {exc}\n")
        return 2
    except StretchLabError as exc:
        sys.stderr.write(f"stretchlab: error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
