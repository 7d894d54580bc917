"""Figure rendering for solver, sweep, and profile outputs.

Reads the JSON/CSV artifacts the other subcommands write and renders
summary figures to PNG files next to a small JSON index.  matplotlib
is imported lazily with the Agg backend so the numeric subcommands
never touch a display stack.
"""

from __future__ import annotations

import csv
import json
import os

import numpy as np


def _plt():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def _read_csv(path):
    """Columns of a '#'-commented CSV as a dict of float arrays
    (non-numeric columns come back as object arrays)."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(l for l in fh if not l.startswith("#")))
    out = {}
    for k in rows[0]:
        col = [r[k] for r in rows]
        try:
            out[k] = np.array([float(v) for v in col])
        except ValueError:
            out[k] = np.array(col, dtype=object)
    return out


def _save(fig, out_dir, name, made):
    path = os.path.join(out_dir, name)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    made.append(path)


def render_solve(result_path, out_dir):
    """Figures for a solve result: R(s, t) heatmap, axial R profile,
    and the energy descent history."""
    plt = _plt()
    with open(result_path) as fh:
        res = json.load(fh)
    made = []
    grid = _read_csv(os.path.join(os.path.dirname(result_path) or ".",
                                  res["map_csv"]) if not os.path.isabs(res["map_csv"])
                     else res["map_csv"])
    Ns1 = len(np.unique(grid["i"]))
    Nt = len(np.unique(grid["j"]))
    s = grid["s"].reshape(Ns1, Nt)
    t = grid["t"].reshape(Ns1, Nt)
    R = grid["R"].reshape(Ns1, Nt)

    fig, ax = plt.subplots(figsize=(6, 3.2))
    pc = ax.pcolormesh(t, s, R, shading="gouraud", cmap="RdBu_r")
    fig.colorbar(pc, ax=ax, label="R")
    ax.set_xlabel("t")
    ax.set_ylabel("s")
    ax.set_title(f"target R coordinate, p = {res['p']}")
    _save(fig, out_dir, "solve_R_heatmap.png", made)
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(4.2, 3.2))
    ax.plot(s[:, 0], R[:, 0], marker=".", lw=1)
    ax.set_xlabel("s")
    ax.set_ylabel("R(s, t=0)")
    ax.set_title("axial profile")
    ax.grid(alpha=0.3)
    _save(fig, out_dir, "solve_R_profile.png", made)
    plt.close(fig)

    hist = np.asarray(res.get("j_history", []), dtype=float)
    if hist.size > 1:
        fig, ax = plt.subplots(figsize=(4.2, 3.2))
        drop = hist - hist.min()
        ax.semilogy(np.maximum(drop, np.finfo(float).tiny))
        ax.set_xlabel("iteration")
        ax.set_ylabel("J_p - min J_p")
        ax.set_title("energy descent")
        ax.grid(alpha=0.3)
        _save(fig, out_dir, "solve_descent.png", made)
        plt.close(fig)
    return made


def render_sweep(sweep_path, out_dir, density_dir=None):
    """Figures for a p-sweep: normalization vs p, concentration vs p,
    residual diagnostics, and the axial density marginals if the
    per-p density CSVs are available."""
    plt = _plt()
    with open(sweep_path) as fh:
        doc = json.load(fh)
    recs = doc["records"]
    made = []
    p = np.array([r["p"] for r in recs])
    L = doc.get("config", {}).get("geometry", {}).get("L")

    fig, ax = plt.subplots(figsize=(4.6, 3.4))
    ax.plot(p, [r["Jp_root"] for r in recs], "o-", label=r"$J_p^{1/p}$")
    ax.plot(p, [1.0 / r["kappa_p"] for r in recs], "s--", label=r"$1/\kappa_p$")
    if L:
        ax.axhline(L, color="k", lw=0.8, ls=":", label="L")
    ax.set_xscale("log", base=2)
    ax.set_xlabel("p")
    ax.set_title("renormalized energy root")
    ax.legend()
    ax.grid(alpha=0.3)
    _save(fig, out_dir, "sweep_normalization.png", made)
    plt.close(fig)

    eps_keys = sorted(recs[0]["concentration"], key=float)
    fig, ax = plt.subplots(figsize=(4.6, 3.4))
    for ek in eps_keys:
        ax.plot(p, [r["concentration"][ek] for r in recs], "o-",
                label=f"eps = {ek}")
    ax.set_xscale("log", base=2)
    ax.set_ylim(0, 1.02)
    ax.set_xlabel("p")
    ax.set_ylabel("mass fraction in |s| <= eps")
    ax.set_title("concentration toward the core geodesic")
    ax.legend()
    ax.grid(alpha=0.3)
    _save(fig, out_dir, "sweep_concentration.png", made)
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(4.6, 3.4))
    ax.loglog(p, [max(r["el_residual"], 1e-300) for r in recs], "o-",
              label="EL residual")
    ax.loglog(p, [max(r["closedness_defect"], 1e-300) for r in recs], "s--",
              label="closedness defect")
    ax.set_xlabel("p")
    ax.set_title("stationarity diagnostics")
    ax.legend()
    ax.grid(alpha=0.3, which="both")
    _save(fig, out_dir, "sweep_residuals.png", made)
    plt.close(fig)

    if density_dir is None:
        density_dir = doc.get("density_dir")
    if density_dir and os.path.isdir(density_dir):
        fig, ax = plt.subplots(figsize=(4.6, 3.4))
        for r in recs:
            path = os.path.join(density_dir, f"density_p{r['p']:g}.csv")
            if not os.path.exists(path):
                continue
            cols = _read_csv(path)
            s_c = np.unique(cols["s_c"])
            dens = np.zeros_like(s_c)
            # Axial marginal: average the cell density over the t ring.
            for k, sv in enumerate(s_c):
                m = cols["s_c"] == sv
                dens[k] = np.mean(cols["density"][m])
            ax.plot(s_c, dens, label=f"p = {r['p']:g}")
        ax.set_xlabel("s")
        ax.set_ylabel(r"$\mathrm{Tr}\,Q(\kappa_p du)^p$")
        ax.set_yscale("log")
        ax.set_title("normalized energy density")
        ax.legend(fontsize=8)
        ax.grid(alpha=0.3)
        _save(fig, out_dir, "sweep_density.png", made)
        plt.close(fig)
    return made


def render_profile(profile_path, out_dir):
    """Figures for an ODE profile CSV: R and R' against s, regions
    shaded where present."""
    plt = _plt()
    cols = _read_csv(profile_path)
    made = []
    s, R, Rp = cols["s"], cols["R"], cols["Rprime"]
    region = cols.get("region")

    fig, axes = plt.subplots(1, 2, figsize=(8.2, 3.2))
    axes[0].plot(s, R, lw=1.2)
    axes[0].set_xlabel("s")
    axes[0].set_ylabel("R")
    axes[1].plot(s, Rp, lw=1.2, color="C1")
    axes[1].set_xlabel("s")
    axes[1].set_ylabel("dR/ds")
    if region is not None and region.dtype == object:
        names = list(dict.fromkeys(region.tolist()))
        if len(names) > 1:
            cmap = plt.get_cmap("Pastel1")
            for ax in axes:
                for k, nm in enumerate(names):
                    m = region == nm
                    ax.fill_between(s, 0, 1, where=m, transform=ax.get_xaxis_transform(),
                                    color=cmap(k % 9), alpha=0.35,
                                    label=nm if ax is axes[0] else None)
            axes[0].legend(fontsize=8)
    for ax in axes:
        ax.grid(alpha=0.3)
    fig.suptitle(os.path.basename(profile_path))
    _save(fig, out_dir, "profile.png", made)
    plt.close(fig)
    return made


def render(out_dir, solve=None, sweep=None, profile=None, density_dir=None):
    """Render whichever artifacts were passed; returns the index dict."""
    os.makedirs(out_dir, exist_ok=True)
    made = []
    if solve:
        made += render_solve(solve, out_dir)
    if sweep:
        made += render_sweep(sweep, out_dir, density_dir=density_dir)
    if profile:
        made += render_profile(profile, out_dir)
    index = {"figures": [os.path.basename(m) for m in made]}
    with open(os.path.join(out_dir, "figures.json"), "w") as fh:
        json.dump(index, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return index
