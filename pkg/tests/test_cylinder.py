"""Discretized collar: chart/embedding round trips, holonomy seam,
quadrature against closed-form integrals, discrete differential
consistency, grid refinement, and the CSV round trip."""

import numpy as np
import pytest

import stretchlab.cylinder as cyl_mod
import stretchlab.minkowski as mk
from stretchlab.cylinder import (Cylinder, GridMap, discrete_differential,
                                 embed_grid, embed_profile, extended_values,
                                 gauge_fix, holonomy, load_gridmap_csv,
                                 node_differential, quadrature, refine_grid_map,
                                 target_chart, target_embed, gridmap_to_csv)
from stretchlab.errors import InvariantViolation


@pytest.fixture
def cyl():
    return Cylinder(h=0.5, d=1.2, L=1.5, Ns=16, Nt=32)


# ---------------------------------------------------------------------------
# geometry bookkeeping
# ---------------------------------------------------------------------------

def test_metric_area(cyl):
    """|M| = d integral cosh s ds = 2 d sinh h."""
    assert abs(cyl.area - 1.2 * 2.0 * np.sinh(0.5)) < 1e-14
    ones = np.ones((cyl.Ns, cyl.Nt))
    # midpoint rule on cosh: second order in ds
    e16 = abs(quadrature(ones, cyl) - cyl.area)
    fine = Cylinder(h=0.5, d=1.2, L=1.5, Ns=64, Nt=32)
    e64 = abs(quadrature(np.ones((64, 32)), fine) - cyl.area)
    assert e16 < 5e-4
    assert e64 < e16 / 8.0


def test_quadrature_closed_form(cyl):
    """integral s^2 cosh s ds dt has the antiderivative
    s^2 sinh s - 2 s cosh s + 2 sinh s."""
    h = cyl.h
    exact = cyl.d * 2.0 * (h * h * np.sinh(h) - 2.0 * h * np.cosh(h)
                           + 2.0 * np.sinh(h))
    f = cyl.s_cells[:, None] ** 2 * np.ones((1, cyl.Nt))
    coarse = quadrature(f, cyl)
    fine_cyl = Cylinder(h=0.5, d=1.2, L=1.5, Ns=64, Nt=32)
    fine = quadrature(fine_cyl.s_cells[:, None] ** 2 * np.ones((1, 32)), fine_cyl)
    # 4x finer grid, second-order rule: error drops by 16
    assert abs(fine - exact) < abs(coarse - exact) / 8.0
    assert abs(fine - exact) < 1e-4


def test_node_weights_total(cyl):
    """Lumped node masses (trapezoid in s) sum to the trapezoid area."""
    w = cyl.node_weights()
    trap = np.trapezoid(np.cosh(cyl.s_nodes), dx=cyl.ds) * cyl.d
    assert abs(w.sum() - trap) < 1e-12


def test_cylinder_validation():
    with pytest.raises(InvariantViolation):
        Cylinder(h=-1.0, d=1.0, L=1.5, Ns=8, Nt=8)
    with pytest.raises(InvariantViolation):
        Cylinder(h=0.5, d=1.0, L=0.5, Ns=8, Nt=8)
    with pytest.raises(InvariantViolation):
        Cylinder(h=0.5, d=1.0, L=1.5, Ns=7, Nt=8)     # odd Ns
    with pytest.raises(InvariantViolation):
        Cylinder(h=0.5, d=1.0, L=1.5, Ns=8, Nt=3)


# ---------------------------------------------------------------------------
# chart and seam
# ---------------------------------------------------------------------------

def test_chart_roundtrip(rng):
    R = rng.uniform(-1.5, 1.5, size=(50,))
    T = rng.uniform(-2.0, 2.0, size=(50,))
    X = target_embed(R, T)
    assert np.all(mk.on_hyperboloid(X))
    R2, T2 = target_chart(X)
    np.testing.assert_allclose(R2, R, atol=1e-12)
    np.testing.assert_allclose(T2, T, atol=1e-12)


def test_twist_exactness(cyl, rng):
    """M u(s, t) = u(s, t + d) with M the holonomy translation by L d:
    exact for separated maps u = embed(R(s), L t + g(t))."""
    M = holonomy(cyl)
    R = rng.uniform(-0.5, 0.5, size=(7,))
    T = rng.uniform(-2.0, 2.0, size=(7,))
    X = target_embed(R, T)
    np.testing.assert_allclose(
        X @ M.T, target_embed(R, T + cyl.holonomy_angle), atol=1e-12)


def test_extended_values_seam(cyl):
    u = embed_profile(cyl, lambda s: 0.2 * s)
    ext = extended_values(u, cyl)
    assert ext.shape == (cyl.Ns + 1, cyl.Nt + 1, 3)
    np.testing.assert_allclose(ext[:, -1], u.values[:, 0] @ holonomy(cyl).T,
                               atol=1e-14)


def test_gridmap_validation(cyl):
    vals = np.zeros((cyl.Ns + 1, cyl.Nt, 3))
    with pytest.raises(InvariantViolation):
        GridMap.make(vals, cyl)          # origin of R^{2,1} is not on H
    bad_shape = np.zeros((cyl.Ns, cyl.Nt, 3))
    with pytest.raises(InvariantViolation):
        GridMap.make(bad_shape, cyl)


# ---------------------------------------------------------------------------
# discrete differential
# ---------------------------------------------------------------------------

def test_differential_richardson(cyl):
    """Cell-centered differences converge at second order to the
    frame components (R'(s), L cosh R / cosh s) of a separated map."""
    Rf = lambda s: 0.3 * np.sin(s)
    Rp = lambda s: 0.3 * np.cos(s)

    def sup_err(c):
        u = embed_profile(c, Rf)
        A = discrete_differential(u, c)
        sc = c.s_cells
        want_s = np.abs(Rp(sc))
        want_t = c.L * np.cosh(Rf(sc)) / np.cosh(sc)
        ns = np.sqrt(np.maximum(mk.mink_inner(A.cols[..., 0, :],
                                              A.cols[..., 0, :]), 0.0))
        nt = np.sqrt(np.maximum(mk.mink_inner(A.cols[..., 1, :],
                                              A.cols[..., 1, :]), 0.0))
        return max(np.max(np.abs(ns - want_s[:, None])),
                   np.max(np.abs(nt - want_t[:, None])))

    e1 = sup_err(cyl)
    e2 = sup_err(cyl.refined())
    assert e2 < e1 / 3.0
    assert e2 < 1e-3


def test_node_differential_matches_cells_on_linear(cyl):
    """Both stencils are exact on maps linear in the chart up to the
    nonlinearity of the embedding; compare them on a smooth map."""
    u = embed_profile(cyl, lambda s: 0.1 * s)
    Ac = discrete_differential(u, cyl)
    An = node_differential(u, cyl)
    s1c = np.max(np.sqrt(np.maximum(mk.mink_inner(Ac.cols, Ac.cols), 0.0)))
    s1n = np.max(np.sqrt(np.maximum(mk.mink_inner(An.cols, An.cols), 0.0)))
    assert abs(s1c - s1n) < 5e-3


# ---------------------------------------------------------------------------
# refinement, gauge, serialization
# ---------------------------------------------------------------------------

def test_refine_preserves_coarse_nodes(cyl):
    u = embed_profile(cyl, lambda s: 0.2 * np.sin(s))
    uf, cf = refine_grid_map(u, cyl)
    assert (cf.Ns, cf.Nt) == (2 * cyl.Ns, 2 * cyl.Nt)
    np.testing.assert_allclose(uf.values[::2, ::2], u.values, atol=1e-14)
    assert np.all(mk.on_hyperboloid(uf.values, tol=1e-10))


def test_gauge_fix_centers_map(cyl):
    u0 = embed_profile(cyl, lambda s: 0.1 * s)
    shifted = GridMap(u0.values @ mk.t_translation(0.4).T)
    fixed = gauge_fix(shifted, cyl)
    _, T0 = target_chart(fixed.values)
    _, Tw = target_chart(u0.values)
    np.testing.assert_allclose(T0, Tw, atol=1e-10)


def test_csv_roundtrip(tmp_path, cyl):
    u = embed_grid(cyl, 0.2 * np.sin(cyl.s_nodes)[:, None],
                   cyl.L * cyl.t_nodes[None, :] + 0.01)
    path = tmp_path / "map.csv"
    gridmap_to_csv(path, cyl, u, comment="roundtrip fixture")
    text = path.read_text()
    assert text.startswith("#")
    assert "roundtrip fixture" in text.splitlines()[0]
    back = load_gridmap_csv(path, cyl)
    np.testing.assert_allclose(back.values, u.values, atol=1e-12)


def test_load_rejects_wrong_grid(tmp_path, cyl):
    u = embed_profile(cyl, lambda s: np.zeros_like(s))
    path = tmp_path / "map.csv"
    gridmap_to_csv(path, cyl, u)
    other = Cylinder(h=0.5, d=1.2, L=1.5, Ns=8, Nt=16)
    with pytest.raises(InvariantViolation):
        load_gridmap_csv(path, other)
