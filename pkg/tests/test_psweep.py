"""Normalized measures and the warm-started p-sweep: kappa algebra,
density mass, concentration fractions, the current primitive with its
mass bound, and the sweep record contract on a small grid."""

import numpy as np
import pytest

import stretchlab.minkowski as mk
from stretchlab.cylinder import Cylinder, GridMap, embed_profile, quadrature, target_embed
from stretchlab.errors import DegenerateMap
from stretchlab.jp_solver import NoetherCurrent, SolverOptions, noether_current
from stretchlab.psweep import (concentration, default_init, density_S, kappa,
                               lipschitz_estimate, primitive_vq, sweep)


@pytest.fixture
def cyl():
    return Cylinder(h=0.5, d=1.2, L=1.5, Ns=16, Nt=32)


def zero_embed(c):
    return embed_profile(c, lambda s: np.zeros_like(s))


# ---------------------------------------------------------------------------
# kappa, density, concentration
# ---------------------------------------------------------------------------

def test_kappa_normalizes_to_one_ulp(cyl):
    from stretchlab.jp_solver import J_p
    u = zero_embed(cyl)
    for p in (4.0, 8.0, 64.0):
        kap = kappa(u, cyl, p)
        prod = kap * J_p(u, cyl, p) ** (1.0 / p)
        assert abs(prod - 1.0) <= 4.0 * np.finfo(float).eps


def test_twist_forces_positive_energy(cyl):
    """Maps with constant node values still cross the holonomy seam,
    so the twisted bundle admits no zero-energy section and kappa
    stays finite."""
    const = GridMap(np.broadcast_to([0.0, 0.0, 1.0],
                                    (cyl.Ns + 1, cyl.Nt, 3)).copy())
    kap = kappa(const, cyl, 8.0)
    assert np.isfinite(kap) and kap > 0.0


def test_density_mass_is_one(cyl):
    for p in (4.0, 8.0, 64.0):
        u = default_init(cyl, amplitude=0.03, seed=1)
        kap = kappa(u, cyl, p)
        assert abs(quadrature(density_S(u, cyl, p, kap), cyl) - 1.0) < 1e-12


def test_concentration_against_cell_mask_oracle(cyl):
    """Uniform density: the fraction is the relative cosh-weighted area
    of the cells with |s_c| <= eps, recomputed here directly."""
    dens = np.ones((cyl.Ns, cyl.Nt))
    w = cyl.cell_weights()
    for eps in (0.05, 0.1, 0.2):
        mask = (np.abs(cyl.s_cells) <= eps)[:, None]
        want = float((w * mask).sum() / w.sum())
        assert abs(concentration(dens, cyl, eps) - want) < 1e-14
    assert concentration(dens, cyl, cyl.h) == 1.0


def test_concentration_monotone_in_eps(cyl):
    u = zero_embed(cyl)
    dens = density_S(u, cyl, 8.0, kappa(u, cyl, 8.0))
    vals = [concentration(dens, cyl, e) for e in (0.05, 0.1, 0.2)]
    assert vals[0] <= vals[1] <= vals[2]


def test_concentration_rejects_zero_mass(cyl):
    with pytest.raises(DegenerateMap):
        concentration(np.zeros((cyl.Ns, cyl.Nt)), cyl, 0.1)


def test_lipschitz_estimate_exact_family(cyl):
    """R = 0 embed: s1(s) = L / cosh s, maximized at the center cells."""
    got = lipschitz_estimate(zero_embed(cyl), cyl)
    assert cyl.L / np.cosh(cyl.h) <= got <= cyl.L * (1.0 + 1e-10)
    assert abs(got - cyl.L / np.cosh(cyl.ds / 2.0)) < 1e-3


# ---------------------------------------------------------------------------
# default initial map
# ---------------------------------------------------------------------------

def test_default_init_carries_exact_dirichlet_rows(cyl):
    u = default_init(cyl, amplitude=0.05, seed=3, R0=0.25)
    t = cyl.t_nodes
    np.testing.assert_allclose(u.values[0], target_embed(-0.25, cyl.L * t),
                               atol=1e-14)
    np.testing.assert_allclose(u.values[-1], target_embed(0.25, cyl.L * t),
                               atol=1e-14)
    assert np.all(mk.on_hyperboloid(u.values))


def test_default_init_deterministic(cyl):
    a = default_init(cyl, amplitude=0.02, seed=0).values
    b = default_init(cyl, amplitude=0.02, seed=0).values
    np.testing.assert_array_equal(a, b)


# ---------------------------------------------------------------------------
# current primitive
# ---------------------------------------------------------------------------

def test_primitive_zero_current(cyl):
    z = np.zeros((cyl.Ns, cyl.Nt, 3, 3))
    samp = primitive_vq(NoetherCurrent(Vs=z, Vt=z, kappa=1.0, defect=0.0), cyl)
    np.testing.assert_allclose(samp.v_grid, 0.0)
    assert samp.tv_s == 0.0
    assert samp.path_dependence == 0.0


def test_primitive_on_exact_solution(cyl):
    """Exact Neumann family: the primitive is constant in t, its total
    variation across the collar respects the transverse mass bound
    (<= 2), and loop defects match the closedness defect."""
    u = zero_embed(cyl)
    kap = kappa(u, cyl, 8.0)
    cur = noether_current(u, cyl, 8.0, kappa=kap)
    samp = primitive_vq(cur, cyl)
    assert np.max(np.abs(samp.v_grid - samp.v_grid[:, :1])) < 1e-12
    assert samp.tv_s <= 2.0 + 1e-12
    assert samp.tv_s > 0.5                 # genuinely transverse mass
    assert samp.loop_defect_max == cur.defect
    assert samp.path_dependence < 1e-12
    # anchored at the s = 0 line: interpolated middle value vanishes
    mid = cyl.Ns // 2
    anchor = 0.5 * (samp.v_axis[mid - 1] + samp.v_axis[mid])
    np.testing.assert_allclose(anchor, 0.0, atol=1e-12)


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------

def test_sweep_small_grid():
    cyl = Cylinder(h=0.5, d=1.2, L=1.5, Ns=8, Nt=16)
    opts = SolverOptions(p=4.0, grad_tol=1e-8)
    recs, maps = sweep([4.0, 8.0], cyl, opts, eps_list=(0.1, 0.2),
                       store_maps=True)
    assert [r.p for r in recs] == [4.0, 8.0]
    assert len(maps) == 2
    for r in recs:
        assert r.converged and r.error is None
        assert abs(r.kappa_p * r.Jp_root - 1.0) <= 4.0 * np.finfo(float).eps
        assert abs(r.mass_S - 1.0) < 1e-10
        assert set(r.concentration) == {0.1, 0.2}
        assert r.concentration[0.1] <= r.concentration[0.2]
        assert np.isfinite(r.closedness_defect)
    # warm start: the p = 8 solve starts from the p = 4 minimizer
    assert recs[1].iters <= recs[0].iters
    # J_p^{1/p} -> sup s1 = L: the gap shrinks along the sweep
    assert abs(recs[1].Jp_root - cyl.L) < abs(recs[0].Jp_root - cyl.L)


def test_sweep_record_serializes():
    cyl = Cylinder(h=0.5, d=1.2, L=1.5, Ns=8, Nt=16)
    opts = SolverOptions(p=4.0, grad_tol=1e-6)
    recs = sweep([4.0], cyl, opts, eps_list=(0.1,))
    doc = recs[0].to_dict()
    assert doc["p"] == 4.0
    assert set(doc["concentration"]) == {"0.1"}
    assert isinstance(doc["converged"], bool)
