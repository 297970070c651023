import json
import math

import numpy as np
import pytest

import boundarymax as bm
from boundarymax import io as bmio
from boundarymax.cli import main, run_config, sweep_config


def write_config(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return path


SMP_FLAT = {
    "experiment": "solve-smp",
    "h": 1 / 32,
    "C": 0.0,
    "domain": {"shape": "disc", "center": [0.0, 0.0], "radius": 1.0},
    "metric": {"kind": "flat"},
    "boundary": {"kind": "constant", "value": 1.0},
    "expect_verdict": "ConstantField",
}


# ---------------------------------------------------------------------------
# artifact formats
# ---------------------------------------------------------------------------

def test_field_csv_round_trip(tmp_path, unit_disc_grid):
    field = bm.ScalarField.from_callable(unit_disc_grid, lambda x, y: x + y)
    path = tmp_path / "field.csv"
    bmio.write_field_csv(path, field)
    header = path.read_text().splitlines()[0]
    assert header == "x,y,class,value"
    xs, ys, classes, values = bmio.read_field_csv(path)
    assert np.array_equal(xs, unit_disc_grid.xs)
    assert np.array_equal(values, field.values)
    letters = np.array(["I", "B", "E"])[unit_disc_grid.node_class]
    assert np.array_equal(classes, letters)


def test_field_csv_reports_bad_line(tmp_path):
    path = tmp_path / "broken.csv"
    path.write_text("x,y,class,value\n0.0,0.0,I,1.0\n0.5,0.0,Q,1.0\n")
    with pytest.raises(bm.MalformedCSV) as err:
        bmio.read_field_csv(path)
    assert err.value.line_no == 3


def test_vector_csv_header(tmp_path, unit_disc_grid):
    u = bm.VectorField(grid=unit_disc_grid,
                       ux=np.ones((unit_disc_grid.ny, unit_disc_grid.nx)),
                       uy=np.zeros((unit_disc_grid.ny, unit_disc_grid.nx)))
    path = tmp_path / "u.csv"
    bmio.write_vector_csv(path, u)
    assert path.read_text().splitlines()[0] == "x,y,class,ux,uy"


def test_series_artifacts(tmp_path):
    h = 1 / 64
    state = bm.moving_pulse_state(0.0, h, 65, 0.5, 0.1, 1.0)
    series = bm.evolve_kg(bm.MinkowskiSpacetime(1.0), 0.0, state, 0.5 * h, 16,
                          snapshot_every=8)
    paths = bmio.write_series(tmp_path, series)
    index = json.loads((tmp_path / "index.json").read_text())
    assert set(index) == {"times", "energy", "cfl"}
    assert len(index["times"]) == len(series.slices)
    slice0 = (tmp_path / "slice_0000.csv").read_text().splitlines()
    assert slice0[0] == "x,P,dPdt"
    assert len(slice0) == 66


# ---------------------------------------------------------------------------
# run command
# ---------------------------------------------------------------------------

def test_run_solve_smp_passes(tmp_path):
    cfg = write_config(tmp_path, SMP_FLAT)
    out = tmp_path / "out"
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["passed"]
    assert set(manifest["artifacts"]) == {"field.csv", "smp_report.json"}
    report = json.loads((out / "smp_report.json").read_text())
    assert report["verdict"] == "ConstantField"
    for key in ("interior_max", "interior_max_xy", "boundary_max",
                "boundary_max_xy", "margin", "verdict", "residual", "iterations"):
        assert key in report


def test_run_rejects_unknown_keys(tmp_path):
    cfg = write_config(tmp_path, {**SMP_FLAT, "bogus": 1})
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    nested = dict(SMP_FLAT)
    nested["domain"] = {"shape": "disc", "radius": 1.0, "rad": 2.0}
    cfg2 = write_config(tmp_path, nested, "cfg2.json")
    assert main(["run", "--config", str(cfg2), "--out", str(tmp_path / "o2")]) == 2


def test_run_rejects_unknown_experiment_and_bad_values(tmp_path):
    cfg = write_config(tmp_path, {"experiment": "nope"})
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    cfg2 = write_config(tmp_path, {**SMP_FLAT, "h": "fine"}, "c2.json")
    assert main(["run", "--config", str(cfg2), "--out", str(tmp_path / "o2")]) == 2


def test_failed_check_exits_one(tmp_path):
    cfg = write_config(tmp_path, {**SMP_FLAT, "expect_verdict": "Violation"})
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1


def test_domain_error_exits_three(tmp_path):
    bad = dict(SMP_FLAT)
    bad["h"] = 0.5  # too coarse for the unit disc
    bad.pop("expect_verdict")
    cfg = write_config(tmp_path, bad)
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 3


def test_run_is_deterministic(tmp_path):
    cfg = write_config(tmp_path, SMP_FLAT)
    m1 = run_config(json.loads(cfg.read_text()), tmp_path / "a")
    m2 = run_config(json.loads(cfg.read_text()), tmp_path / "b")
    assert m1["artifacts"] == m2["artifacts"]


def test_seed_override_changes_random_case(tmp_path):
    base = {
        "experiment": "solve-smp", "h": 1 / 32,
        "metric": {"kind": "random"},
        "domain": {"shape": "disc", "radius": 1.0},
        "boundary": {"kind": "constant", "value": 1.0},
    }
    m1 = run_config(base, tmp_path / "s1", seed=1)
    m2 = run_config(base, tmp_path / "s2", seed=2)
    m1b = run_config(base, tmp_path / "s1b", seed=1)
    assert m1["artifacts"] != m2["artifacts"]
    assert m1["artifacts"] == m1b["artifacts"]


def test_signature_experiment(tmp_path):
    manifest = run_config({"experiment": "signature"}, tmp_path)
    assert manifest["passed"]
    report = json.loads((tmp_path / "signature_report.json").read_text())
    assert report["minkowski"]["verdict"] == "LorentzianMixed"
    assert report["flat"]["verdict"] == "RiemannianDefinite"
    assert set(report["minkowski"]) == {"points", "eigen_signs", "verdict"}


def test_convergence_experiment(tmp_path):
    manifest = run_config({"experiment": "convergence", "case": "flat-sinsin",
                           "h_list": [1 / 8, 1 / 16, 1 / 32]}, tmp_path)
    assert manifest["passed"]
    report = json.loads((tmp_path / "convergence_report.json").read_text())
    assert 1.9 <= report["order_estimate"] <= 2.1


def test_kg_counterexample_experiment(tmp_path):
    manifest = run_config({"experiment": "kg-counterexample", "h": 1 / 128},
                          tmp_path)
    assert manifest["passed"]
    report = json.loads((tmp_path / "spacetime_smp_report.json").read_text())
    assert report["verdict"] == "Violation"
    assert report["max_ratio"] >= 1.9
    index = json.loads((tmp_path / "index.json").read_text())
    assert index["cfl"] == pytest.approx(0.5)


# ---------------------------------------------------------------------------
# sweep command
# ---------------------------------------------------------------------------

def test_sweep_empty_grid_runs_base_once(tmp_path):
    aggregate = sweep_config({"base": SMP_FLAT, "grid": {}}, tmp_path)
    assert aggregate["n_combinations"] == 1
    assert aggregate["pass_rate"] == 1.0
    assert "base" in aggregate["combos"]


def test_sweep_over_seeds(tmp_path, monkeypatch):
    monkeypatch.setenv("BM_THREADS", "1")
    base = {
        "experiment": "solve-smp", "h": 1 / 32,
        "metric": {"kind": "random"},
        "domain": {"shape": "disc", "radius": 1.0},
        "boundary": {"kind": "constant", "value": 1.0},
    }
    aggregate = sweep_config({"base": base, "grid": {"seed": list(range(6))}},
                             tmp_path)
    assert aggregate["n_combinations"] == 6
    assert aggregate["pass_rate"] == 1.0
    data = json.loads((tmp_path / "sweep_manifest.json").read_text())
    assert data["n_passed"] == 6


def test_sweep_continues_after_individual_failure(tmp_path):
    base = dict(SMP_FLAT)
    aggregate = sweep_config(
        {"base": base, "grid": {"h": [1 / 32, 0.5]}}, tmp_path)  # 0.5 too coarse
    assert aggregate["n_combinations"] == 2
    assert aggregate["n_passed"] == 1
    failing = [v for v in aggregate["combos"].values() if not v["passed"]]
    assert "error" in failing[0]


def test_sweep_rejects_too_many_combinations(tmp_path):
    with pytest.raises(bm.ConfigInvalid):
        sweep_config({"base": SMP_FLAT,
                      "grid": {"seed": list(range(101)), "C": [0.0] * 101}},
                     tmp_path)


def test_sweep_aggregates_convergence_orders(tmp_path):
    base = {"experiment": "convergence", "case": "flat-sinsin",
            "h_list": [1 / 8, 1 / 16, 1 / 32]}
    aggregate = sweep_config(
        {"base": base, "grid": {"case": ["flat-sinsin", "linear"]}}, tmp_path)
    assert aggregate["pass_rate"] == 1.0
