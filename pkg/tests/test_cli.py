"""End-to-end CLI behavior: subcommand outputs, config/flag precedence,
determinism, and the exit-code contract."""

import json
import subprocess
import sys

import numpy as np
import pytest

import qshs.cli as cli
from qshs.fileio import read_csv, read_imgf, read_kspace, read_manifest
from qshs.forward import dft2_inverse
from qshs.phantoms import get_phantom


def run(*argv):
    return cli.main(list(argv))


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def test_simulate_full_density_noiseless_round_trip(tmp_path):
    out = tmp_path / "sim"
    rc = run("simulate", "--image", "blobs:32", "--mask", "uniform:1.0",
             "--sigma", "0", "--out", str(out))
    assert rc == 0
    m = read_kspace(out / "kspace.ksp1")
    truth = get_phantom("blobs:32")
    recovered = np.real(dft2_inverse(m))
    assert np.max(np.abs(recovered - truth)) <= 1e-10
    assert np.array_equal(read_imgf(out / "truth.imgf"), truth)
    man = read_manifest(out / "manifest.json")
    assert man["realized_density"] == 1.0
    assert (out / "mask.pgm").is_file() and (out / "truth.pgm").is_file()


def test_simulate_deterministic_bytes(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert run("simulate", "--image", "blobs:32", "--mask", "vd:0.3",
                   "--sigma", "2.0", "--seed", "7", "--out", str(out)) == 0
    assert (a / "kspace.ksp1").read_bytes() == (b / "kspace.ksp1").read_bytes()
    assert (a / "mask.pgm").read_bytes() == (b / "mask.pgm").read_bytes()


def test_simulate_seed_changes_output(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    run("simulate", "--image", "blobs:32", "--mask", "vd:0.3", "--sigma", "2.0",
        "--seed", "7", "--out", str(a))
    run("simulate", "--image", "blobs:32", "--mask", "vd:0.3", "--sigma", "2.0",
        "--seed", "8", "--out", str(b))
    assert (a / "kspace.ksp1").read_bytes() != (b / "kspace.ksp1").read_bytes()


def test_simulate_density_within_one_bin(tmp_path):
    out = tmp_path / "s"
    run("simulate", "--image", "shepp-logan:32", "--mask", "vd:0.25",
        "--out", str(out))
    man = read_manifest(out / "manifest.json")
    assert man["realized_density"] == pytest.approx(0.25, abs=1.0 / (32 * 32))


# ---------------------------------------------------------------------------
# reconstruct
# ---------------------------------------------------------------------------

@pytest.fixture()
def sim_dir(tmp_path):
    out = tmp_path / "sim"
    rc = run("simulate", "--image", "blobs:32", "--mask", "vd:0.4",
             "--sigma", "1.0", "--seed", "3", "--out", str(out))
    assert rc == 0
    return out


def test_reconstruct_outputs(sim_dir, tmp_path):
    out = tmp_path / "rec"
    rc = run("reconstruct", "--kspace", str(sim_dir / "kspace.ksp1"),
             "--mask", str(sim_dir / "mask.pgm"),
             "--truth", str(sim_dir / "truth.imgf"),
             "--rho", "0.5", "--iters", "150", "--out", str(out))
    assert rc == 0
    header, rows = read_csv(out / "traces.csv")
    assert header == ["iteration", "objective", "primal_residual_u",
                      "primal_residual_H"]
    man = read_manifest(out / "manifest.json")
    assert len(rows) == man["iterations_run"] >= 1
    assert man["solver"]["rho"] == 0.5
    u = read_imgf(out / "recon.imgf")
    assert u.shape == (32, 32)
    mh, mrows = read_csv(out / "metrics.csv")
    vals = dict(mrows)
    assert 0.5 < float(vals["ssim"]) <= 1.0
    assert float(vals["mse"]) < 100.0


def test_reconstruct_without_truth_skips_metrics(sim_dir, tmp_path):
    out = tmp_path / "rec"
    rc = run("reconstruct", "--kspace", str(sim_dir / "kspace.ksp1"),
             "--mask", str(sim_dir / "mask.pgm"), "--rho", "0.5",
             "--iters", "40", "--out", str(out))
    assert rc == 0
    assert not (out / "metrics.csv").exists()


def test_reconstruct_hs1_matches_qshs_q1_bytes(sim_dir, tmp_path):
    outs = []
    for tag, extra in (("a", ["--method", "qshs", "--q", "1.0"]),
                       ("b", ["--method", "hs1"])):
        out = tmp_path / tag
        rc = run("reconstruct", "--kspace", str(sim_dir / "kspace.ksp1"),
                 "--mask", str(sim_dir / "mask.pgm"), "--rho", "0.8",
                 "--iters", "60", "--out", str(out), *extra)
        assert rc == 0
        outs.append((out / "recon.imgf").read_bytes())
    assert outs[0] == outs[1]


def test_reconstruct_methods_all_run(sim_dir, tmp_path):
    for method in ("hs2", "tv1"):
        out = tmp_path / method
        rc = run("reconstruct", "--kspace", str(sim_dir / "kspace.ksp1"),
                 "--mask", str(sim_dir / "mask.pgm"), "--rho", "0.4",
                 "--iters", "60", "--method", method, "--out", str(out))
        assert rc == 0
        assert (out / "recon.imgf").is_file()


def test_config_file_with_flag_override(sim_dir, tmp_path):
    cfg = {"solver": {"rho": 2.0, "method": "hs2", "max_iters": 30},
           "kspace": str(sim_dir / "kspace.ksp1"),
           "mask": str(sim_dir / "mask.pgm"),
           "output_dir": str(tmp_path / "rec")}
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(cfg))
    rc = run("reconstruct", "--config", str(cfg_path), "--rho", "0.25")
    assert rc == 0
    man = read_manifest(tmp_path / "rec" / "manifest.json")
    assert man["solver"]["rho"] == 0.25  # flag wins
    assert man["solver"]["method"] == "hs2"  # config survives
    assert man["solver"]["max_iters"] == 30


# ---------------------------------------------------------------------------
# tune / evaluate / benchmark
# ---------------------------------------------------------------------------

def test_tune_outputs(sim_dir, tmp_path):
    out = tmp_path / "tuned"
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(
        {"tune": {"log10_lo": -0.6, "log10_hi": -0.2, "tol": 0.15}}))
    rc = run("tune", "--config", str(cfg_path),
             "--kspace", str(sim_dir / "kspace.ksp1"),
             "--mask", str(sim_dir / "mask.pgm"),
             "--truth", str(sim_dir / "truth.imgf"),
             "--iters", "80", "--out", str(out))
    assert rc == 0
    man = read_manifest(out / "manifest.json")
    assert 10.0 ** -0.6 <= man["best_rho"] <= 10.0 ** -0.2
    assert man["probes"] >= 2
    assert man["bracket_width"] <= 0.15
    _, probes = read_csv(out / "tune_trace.csv")
    assert len(probes) == man["probes"]
    assert (out / "recon.imgf").is_file() and (out / "metrics.csv").is_file()
    best = min(float(r[3]) for r in probes)
    assert man["best_objective"] == pytest.approx(best)


def test_evaluate_identical_images(tmp_path, capsys):
    rc = run("evaluate", "--image", "blobs:32", "--truth", "blobs:32",
             "--out", str(tmp_path / "ev"))
    assert rc == 0
    _, rows = read_csv(tmp_path / "ev" / "metrics.csv")
    vals = dict(rows)
    assert float(vals["mse"]) == 0.0
    assert float(vals["ssim"]) == 1.0
    assert "ssim = 1" in capsys.readouterr().out


def test_benchmark_table(tmp_path):
    out = tmp_path / "bench"
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({
        "benchmark": {"images": ["blobs:32"], "masks": ["vd:0.4"]},
        "tune": {"log10_lo": -0.5, "log10_hi": -0.3, "tol": 0.3},
        "noise": {"sigma": 0.5},
        "solver": {"max_iters": 60}}))
    rc = run("benchmark", "--config", str(cfg_path), "--seed", "5",
             "--out", str(out))
    assert rc == 0
    header, rows = read_csv(out / "table.csv")
    assert header == ["image", "mask", "method", "rho", "mse", "ssim",
                      "iterations", "status"]
    assert [r[2] for r in rows] == ["qshs", "hs1", "hs2", "tv1"]
    assert all(r[7] == "ok" for r in rows)
    for r in rows:
        assert (out / f"blobs_32__vd_0.4__{r[2]}.imgf").is_file()


def test_benchmark_deterministic(tmp_path):
    tables = []
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({
        "benchmark": {"images": ["blobs:32"], "masks": ["vd:0.4"],
                      "methods": ["tv1"]},
        "tune": {"log10_lo": -0.5, "log10_hi": -0.3, "tol": 0.3},
        "noise": {"sigma": 0.5},
        "solver": {"max_iters": 50}}))
    for tag in ("a", "b"):
        out = tmp_path / tag
        assert run("benchmark", "--config", str(cfg_path), "--seed", "2",
                   "--out", str(out)) == 0
        tables.append((out / "table.csv").read_bytes())
    assert tables[0] == tables[1]


# ---------------------------------------------------------------------------
# exit codes
# ---------------------------------------------------------------------------

def test_exit_usage_no_subcommand(capsys):
    assert run() == 1
    assert "subcommand" in capsys.readouterr().err


def test_exit_usage_bad_flag(capsys):
    assert run("reconstruct", "--no-such-flag") == 1


def test_exit_usage_bad_method(capsys):
    assert run("reconstruct", "--method", "ridge") == 1


def test_exit_usage_missing_inputs(capsys):
    assert run("reconstruct") == 1
    assert run("tune") == 1
    assert run("evaluate") == 1


def test_exit_usage_invalid_rho(sim_dir, capsys):
    rc = run("reconstruct", "--kspace", str(sim_dir / "kspace.ksp1"),
             "--mask", str(sim_dir / "mask.pgm"), "--rho", "-1")
    assert rc == 1
    assert "rho" in capsys.readouterr().err


def test_exit_io_missing_mask_file(sim_dir, capsys):
    rc = run("reconstruct", "--kspace", str(sim_dir / "kspace.ksp1"),
             "--mask", "nowhere.pgm")
    assert rc == 2
    assert "mask not found" in capsys.readouterr().err


def test_exit_io_missing_kspace(capsys):
    assert run("reconstruct", "--kspace", "nowhere.ksp1") == 2


def test_exit_io_malformed_kspace(tmp_path, capsys):
    p = tmp_path / "bad.ksp1"
    p.write_bytes(b"JUNKxxxxxxxxxxxx")
    assert run("reconstruct", "--kspace", str(p), "--mask", "vd:0.5") == 2


def test_exit_io_malformed_config(tmp_path, capsys):
    p = tmp_path / "cfg.json"
    p.write_text("{oops")
    assert run("reconstruct", "--config", str(p)) == 2


def test_exit_divergence(sim_dir, tmp_path, monkeypatch, capsys):
    from qshs.solver import SolverDivergenceError

    def blow_up(*a, **k):
        raise SolverDivergenceError("step_u", 3)

    monkeypatch.setattr(cli, "solve", blow_up)
    rc = run("reconstruct", "--kspace", str(sim_dir / "kspace.ksp1"),
             "--mask", str(sim_dir / "mask.pgm"), "--out", str(tmp_path / "o"))
    assert rc == 3
    assert "diverged" in capsys.readouterr().err


def test_help_exits_zero():
    assert run("--help") == 0
    assert run("reconstruct", "--help") == 0


def test_console_entry_point():
    out = subprocess.run([sys.executable, "-m", "qshs.cli", "--help"],
                         capture_output=True, text=True)
    assert out.returncode == 0
    assert "simulate" in out.stdout and "benchmark" in out.stdout
