"""Command-line front end: exit codes, artifact schemas, determinism.

All invocations go through cli.main(argv) in-process; tiny grids keep
every solve under a second.
"""

import json
import os

import numpy as np
import pytest

from stretchlab import cli
from stretchlab.cylinder import Cylinder, load_gridmap_csv

GEOM = ["--h", "0.5", "--d", "1.2", "--L", "1.5", "--Ns", "8", "--Nt", "16"]


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


# -- svcheck ----------------------------------------------------------------

def test_svcheck_report_and_determinism(tmp_path):
    out1 = tmp_path / "sv1.json"
    out2 = tmp_path / "sv2.json"
    argv = ["svcheck", "--trials", "200", "--seed", "3"]
    assert cli.main(argv + ["--out", str(out1)]) == 0
    assert cli.main(argv + ["--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    doc = read_json(out1)
    assert doc["all_pass"] is True
    assert set(doc) >= {"version", "config_hash", "norm_properties", "pointwise"}
    assert doc["norm_properties"]["trials"] == 200


def test_svcheck_stdout(capsys):
    assert cli.main(["svcheck", "--trials", "100"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["all_pass"] is True


# -- solve ------------------------------------------------------------------

def test_solve_tiny_neumann(tmp_path):
    out = tmp_path / "solve.json"
    rc = cli.main(["solve", *GEOM, "--p", "4", "--grad-tol", "1e-6",
                   "--out", str(out)])
    assert rc == 0
    doc = read_json(out)
    assert doc["converged"] is True
    assert doc["bc"] == "neumann"
    assert doc["p"] == 4.0
    assert doc["error"] is None
    assert doc["iters"] >= 1
    assert doc["Jp"] > 0
    assert doc["j_history"][0] >= doc["j_history"][-1]
    map_path = tmp_path / doc["map_csv"]
    assert map_path.exists()
    with open(map_path) as fh:
        assert fh.readline().startswith("#")
    cyl = Cylinder(h=0.5, d=1.2, L=1.5, Ns=8, Nt=16)
    u = load_gridmap_csv(str(map_path), cyl)
    assert u.values.shape == (9, 16, 3)


def test_solve_deterministic_bytes(tmp_path):
    docs = []
    for tag in ("a", "b"):
        sub = tmp_path / tag
        sub.mkdir()
        out = sub / "solve.json"
        assert cli.main(["solve", *GEOM, "--p", "4", "--grad-tol", "1e-6",
                         "--out", str(out)]) == 0
        docs.append(out.read_bytes())
    assert docs[0] == docs[1]


def test_solve_unconverged_exits_2_with_partial(tmp_path):
    out = tmp_path / "solve.json"
    rc = cli.main(["solve", *GEOM, "--p", "4", "--grad-tol", "1e-14",
                   "--max-iters", "3", "--out", str(out)])
    assert rc == 2
    doc = read_json(out)
    assert doc["converged"] is False
    assert doc["iters"] == 3
    assert (tmp_path / doc["map_csv"]).exists()


def test_solve_R0_requires_dirichlet(tmp_path):
    rc = cli.main(["solve", *GEOM, "--p", "4", "--R0", "0.1",
                   "--out", str(tmp_path / "x.json")])
    assert rc == 1


def test_solve_missing_geometry_exits_1(tmp_path):
    rc = cli.main(["solve", "--p", "4", "--out", str(tmp_path / "x.json")])
    assert rc == 1


# -- config files -----------------------------------------------------------

def test_config_file_with_flag_override(tmp_path):
    cfg = {"geometry": {"h": 0.5, "d": 1.2, "L": 1.5, "Ns": 8, "Nt": 16},
           "solver": {"p": 4.0, "grad_tol": 1e-6}}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    out = tmp_path / "solve.json"
    rc = cli.main(["solve", "--config", str(path), "--p", "6",
                   "--out", str(out)])
    assert rc == 0
    doc = read_json(out)
    assert doc["p"] == 6.0  # flag wins over the config block
    assert doc["config"]["geometry"]["Ns"] == 8


def test_config_unknown_keys_exit_1(tmp_path):
    for cfg in ({"bogus": {}},
                {"geometry": {"h": 0.5, "radius": 2.0}},
                {"solver": {"momentum": 0.9}}):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(cfg))
        rc = cli.main(["solve", "--config", str(path), "--p", "4",
                       "--out", str(tmp_path / "x.json")])
        assert rc == 1


# -- ode --------------------------------------------------------------------

def read_profile_csv(path):
    import csv
    with open(path) as fh:
        rows = list(csv.DictReader(l for l in fh if not l.startswith("#")))
    s = np.array([float(r["s"]) for r in rows])
    R = np.array([float(r["R"]) for r in rows])
    region = [r["region"] for r in rows]
    return s, R, region


def test_ode_shoot_csv_and_summary(tmp_path, capsys):
    out = tmp_path / "prof.csv"
    rc = cli.main(["ode", "--p", "8", "--L", "1.5", "--h", "0.5",
                   "--dirichlet-R0", "0.44", "--out", str(out)])
    assert rc == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["out"] == str(out)
    assert doc["meta"]["branch"] == "slope"
    for v in doc["meta"].values():
        assert isinstance(v, (int, float, bool, str))
    s, R, _ = read_profile_csv(out)
    assert s[0] == 0.0 and abs(s[-1] - 0.5) < 1e-12
    assert abs(R[-1] - 0.44) < 1e-8


def test_ode_dead_core_branch(tmp_path, capsys):
    out = tmp_path / "prof.csv"
    rc = cli.main(["ode", "--p", "8", "--L", "1.5", "--h", "0.5",
                   "--dirichlet-R0", "0.30", "--out", str(out)])
    assert rc == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["meta"]["branch"] == "dead_core"
    _, R, region = read_profile_csv(out)
    assert "flat" in region
    assert abs(R[-1] - 0.30) < 1e-6


def test_ode_limit_profile(tmp_path, capsys):
    out = tmp_path / "limit.csv"
    rc = cli.main(["ode", "--L", "1.5", "--h", "0.5", "--limit",
                   "--s-star", "0.2", "--out", str(out)])
    assert rc == 0
    json.loads(capsys.readouterr().out)
    _, _, region = read_profile_csv(out)
    assert {"flat", "line"} <= set(region)


def test_ode_mode_exclusivity(tmp_path):
    out = str(tmp_path / "x.csv")
    assert cli.main(["ode", "--L", "1.5", "--h", "0.5", "--out", out]) == 1
    assert cli.main(["ode", "--p", "8", "--L", "1.5", "--h", "0.5",
                     "--slope0", "0.1", "--limit", "--out", out]) == 1
    assert cli.main(["ode", "--L", "1.5", "--h", "0.5", "--limit",
                     "--out", out]) == 1  # --limit without --s-star


def test_ode_R0_out_of_range_exits_1(tmp_path, capsys):
    rc = cli.main(["ode", "--p", "8", "--L", "1.5", "--h", "0.5",
                   "--dirichlet-R0", "0.9", "--out", str(tmp_path / "x.csv")])
    assert rc == 1
    capsys.readouterr()


# -- sweep ------------------------------------------------------------------

def test_sweep_tiny(tmp_path):
    out = tmp_path / "sweep.json"
    dens = tmp_path / "dens"
    rc = cli.main(["sweep", *GEOM, "--p", "4,8", "--eps", "0.1,0.2",
                   "--grad-tol", "1e-8", "--out", str(out),
                   "--density-dir", str(dens)])
    assert rc == 0
    doc = read_json(out)
    assert doc["eps_list"] == [0.1, 0.2]
    assert len(doc["records"]) == 2
    for rec in doc["records"]:
        assert rec["converged"] is True
        assert rec["error"] is None
        assert abs(rec["kappa_p"] * rec["Jp_root"] - 1.0) < 1e-12
    for p in (4, 8):
        assert (dens / f"density_p{p}.csv").exists()
        assert (dens / f"map_p{p}.csv").exists()


def test_sweep_unconverged_exits_2(tmp_path):
    out = tmp_path / "sweep.json"
    rc = cli.main(["sweep", *GEOM, "--p", "4", "--grad-tol", "1e-14",
                   "--max-iters", "2", "--out", str(out)])
    assert rc == 2
    doc = read_json(out)
    assert doc["records"][0]["converged"] is False


# -- idealmap ---------------------------------------------------------------

def test_idealmap_stdout_and_profile(tmp_path, capsys):
    prof_out = tmp_path / "ideal.csv"
    rc = cli.main(["idealmap", "--h", "0.02", "--h0", "0.4", "--K0", "1.2",
                   "--L", "1.5", "--n-grid", "2000",
                   "--profile-out", str(prof_out)])
    assert rc == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["report"]["passed"] is True
    assert doc["report"]["overall_stretch"] < 1.5
    assert prof_out.exists()


# -- report -----------------------------------------------------------------

def test_report_renders_figures(tmp_path, capsys):
    solve_json = tmp_path / "solve.json"
    assert cli.main(["solve", *GEOM, "--p", "4", "--grad-tol", "1e-6",
                     "--out", str(solve_json)]) == 0
    prof_csv = tmp_path / "prof.csv"
    assert cli.main(["ode", "--p", "8", "--L", "1.5", "--h", "0.5",
                     "--dirichlet-R0", "0.44", "--out", str(prof_csv)]) == 0
    capsys.readouterr()

    figs = tmp_path / "figs"
    rc = cli.main(["report", "--solve", str(solve_json),
                   "--profile", str(prof_csv), "--out-dir", str(figs)])
    assert rc == 0
    index = json.loads(capsys.readouterr().out)
    assert (figs / "figures.json").exists()
    pngs = list(figs.glob("*.png"))
    assert pngs, "report wrote no figures"
    assert index  # echoed index lists the same artifacts


def test_report_requires_an_input(tmp_path):
    assert cli.main(["report", "--out-dir", str(tmp_path / "figs")]) == 1


# -- parser-level behaviour ---------------------------------------------------

def test_usage_errors_exit_1(tmp_path):
    with pytest.raises(SystemExit) as exc:
        cli.main(["solve", *GEOM, "--p", "4"])  # missing required --out
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        cli.main(["frobnicate"])
    assert exc.value.code == 1


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["--version"])
    assert exc.value.code == 0
    assert "stretchlab" in capsys.readouterr().out
