import csv
import hashlib
import json

import numpy as np
import pytest
from scipy.integrate import trapezoid

from tunneltime import RunConfig, ValidationError
from tunneltime.cli import main
from tunneltime.config import parse_assignments


def read_csv(path):
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    return {k: np.array([float(r[k]) for r in rows]) for k in rows[0]}


def test_scatter_u03(tmp_path):
    assert main(["scatter", "--out", str(tmp_path), "--set", "potential.u=0.3"]) == 0
    table = read_csv(tmp_path / "scatter.csv")
    assert list(table) == ["epsilon", "abs_t", "arg_t_unwrapped", "dtheta_deps",
                           "abs_t_prime", "larmor_z", "resonance"]
    assert table["resonance"].sum() >= 2


def test_scatter_free_and_opaque(tmp_path):
    assert main(["scatter", "--out", str(tmp_path / "a"),
                 "--set", "potential.u=0", "--set", "potential.lambda=0"]) == 0
    np.testing.assert_array_equal(read_csv(tmp_path / "a" / "scatter.csv")["abs_t"], 1.0)
    assert main(["scatter", "--out", str(tmp_path / "b"), "--set", "potential.u=0.65"]) == 0
    assert np.max(read_csv(tmp_path / "b" / "scatter.csv")["abs_t"] ** 2) < 1e-2


@pytest.mark.parametrize("u", [0.1, 0.65])
def test_states(tmp_path, u):
    assert main(["states", "--out", str(tmp_path), "--set", f"potential.u={u}"]) == 0
    table = read_csv(tmp_path / "states.csv")
    x = table["x"]
    for col in ("prob_density_unprojected", "prob_density_projected"):
        assert trapezoid(table[col], x) == pytest.approx(1.0, abs=2e-3)
    summary = json.loads((tmp_path / "states_summary.json").read_text())
    assert summary["norm_projected"] == pytest.approx(1.0, abs=2e-3)
    if u == 0.65:
        right = summary["projected_weights"]["right"]
        assert right == pytest.approx(summary["projected_right_analytic"], rel=2e-2)


def test_arrival_outputs_and_manifest(tmp_path):
    assert main(["arrival", "--out", str(tmp_path), "--set", "potential.u=0.65"]) == 0
    table = read_csv(tmp_path / "arrival.csv")
    assert table["p_m"].sum() >= 1 - 1e-3
    summary = json.loads((tmp_path / "arrival_summary.json").read_text())
    for key in ("mean_T", "tau_bar", "terms", "delta_tau", "modulus_term", "phase_term"):
        assert key in summary
    assert summary["hartman"]["earlier_than_free"] is True
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["status"] == "ok"
    assert manifest["config"]["potential.u"] == 0.65
    for name, digest in manifest["outputs"].items():
        assert hashlib.sha256((tmp_path / name).read_bytes()).hexdigest() == digest


def test_arrival_null_with_reason(tmp_path):
    # above every barrier the Keldysh estimate is undefined
    assert main(["arrival", "--out", str(tmp_path), "--set", "potential.u=0.1"]) == 0
    summary = json.loads((tmp_path / "arrival_summary.json").read_text())
    assert summary["keldysh_estimate"] is None
    assert "barrier" in summary["keldysh_estimate_reason"]


def test_json_format(tmp_path):
    assert main(["arrival", "--out", str(tmp_path), "--set", "output.format=json"]) == 0
    payload = json.loads((tmp_path / "arrival.json").read_text())
    assert payload["columns"] == ["m", "tau_m", "p_m"]
    assert not (tmp_path / "arrival.csv").exists()


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text('# paper scenario\npotential.u = 0.53\narrival.gauge = "constant"\n')
    assert main(["arrival", "--config", str(cfg), "--out", str(tmp_path / "o"),
                 "--set", "arrival.t0=10"]) == 0
    manifest = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert manifest["config"]["potential.u"] == 0.53
    assert manifest["config"]["arrival.t0"] == 10.0


def test_sweep(tmp_path):
    assert main(["sweep", "--out", str(tmp_path), "--set", "sweep.u_values=0.3,0.65",
                 "--set", "sweep.jobs=2"]) == 0
    summary = json.loads((tmp_path / "sweep_summary.json").read_text())
    assert [p["u"] for p in summary["points"]] == [0.3, 0.65]
    assert summary["points"][1]["hartman"]["earlier_than_free"] is True
    assert (tmp_path / "arrival_u0.3.csv").exists() and (tmp_path / "arrival_u0.65.csv").exists()


def test_sweep_parallel_matches_serial(tmp_path):
    args = ["--set", "sweep.u_values=0.1,0.55"]
    assert main(["sweep", "--out", str(tmp_path / "s"), *args]) == 0
    assert main(["sweep", "--out", str(tmp_path / "p"), *args, "--set", "sweep.jobs=2"]) == 0
    for name in ("arrival_u0.1.csv", "arrival_u0.55.csv", "sweep_summary.json"):
        assert (tmp_path / "s" / name).read_bytes() == (tmp_path / "p" / name).read_bytes()


def test_verify_passes(tmp_path):
    assert main(["verify", "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "verify_report.json").read_text())
    assert report["passed"] and len(report["checks"]) > 20


def test_even_grid_exit_1(tmp_path, capsys):
    assert main(["verify", "--out", str(tmp_path), "--set", "band.n_grid=1600"]) == 1
    assert "odd" in capsys.readouterr().err


def test_tiny_m_cap_exit_2(tmp_path, capsys):
    assert main(["arrival", "--out", str(tmp_path), "--set", "numerics.m_cap=2"]) == 2
    assert "captured" in capsys.readouterr().err
    failure = json.loads((tmp_path / "failure.json").read_text())
    assert failure["diagnostics"]["captured"] < 0.999
    assert json.loads((tmp_path / "manifest.json").read_text())["status"] == "numerical_failure"


@pytest.mark.parametrize("assignment", ["nope.key=1", "band.n_grid=abc", "arrival.gauge=weird",
                                        "output.format=xml", "numerics.tail_tol=2"])
def test_invalid_settings_exit_1(tmp_path, assignment):
    assert main(["arrival", "--out", str(tmp_path), "--set", assignment]) == 1


def test_missing_config_exit_1(tmp_path):
    assert main(["scatter", "--config", str(tmp_path / "missing.cfg"), "--out", str(tmp_path)]) == 1


def test_overlapping_state_exit_1(tmp_path):
    assert main(["arrival", "--out", str(tmp_path), "--set", "arrival.x_r=0"]) == 1


def test_parse_assignments():
    values = parse_assignments(["a = 1", "potential.u = 0.25  # comment", "", "arrival.gauge='spatial_arrival'"][1:])
    assert values == {"potential.u": 0.25, "arrival.gauge": "spatial_arrival"}
    with pytest.raises(ValidationError):
        parse_assignments(["potential.u 0.3"])
    with pytest.raises(ValidationError):
        RunConfig({"band.n_grid": 4})
