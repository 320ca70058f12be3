import json
import math

import numpy as np
import pytest

from qgibbs.cli import EXIT_CONFIG, EXIT_IO, main
from qgibbs.dataio import dataset_to_csv
from qgibbs.loss import Dataset


@pytest.fixture()
def toy_csv(tmp_path):
    rng = np.random.default_rng(0)
    x = rng.standard_normal((24, 5))
    theta = np.array([2.0, -1.0, 0.0, 0.0, 0.0])
    y = x @ theta + 0.2 * rng.standard_normal(24)
    path = tmp_path / "toy.csv"
    dataset_to_csv(Dataset(x, y), path, response="y")
    return path


def run(args):
    return main([str(a) for a in args])


def read_bytes_except_manifest(outdir):
    return {
        p.name: p.read_bytes()
        for p in sorted(outdir.iterdir())
        if p.name != "manifest.json"
    }


def test_bounds_prints_rates(capsys):
    assert run(["bounds", "--n", 100, "--d", 400, "--s", 5]) == 0
    out = capsys.readouterr().out
    assert "xi = 2.995732" in out
    assert "delta = 0.299573" in out


def test_bounds_writes_csv(tmp_path):
    out = tmp_path / "b"
    assert run(["bounds", "--n", 50, "--d", 100, "--s", 5, "--out", out]) == 0
    lines = (out / "rates.csv").read_text().splitlines()
    assert lines[0] == "quantity,value"
    values = dict(line.split(",") for line in lines[1:])
    assert float(values["varsigma"]) == 0.002
    assert (out / "manifest.json").exists()


def test_bounds_rejects_bad_epsilon(capsys):
    assert run(["bounds", "--n", 100, "--d", 400, "--s", 5, "--epsilon", 1.5]) == EXIT_CONFIG
    assert "epsilon" in capsys.readouterr().err


def test_simulate_preset_writes_table(tmp_path, capsys):
    out = tmp_path / "sim"
    code = run(
        ["simulate", "--preset", "table1", "--reps", 2, "--seed", 7,
         "--methods", "lasso", "--grid-size", 6, "--folds", 3, "--out", out]
    )
    assert code == 0
    lines = (out / "results.csv").read_text().splitlines()
    assert lines[0] == "method,noise,tau,metric,mean,sd,reps,failures"
    rows = [line.split(",") for line in lines[1:]]
    assert {r[0] for r in rows} == {"lasso"}
    assert all(r[6] == "2" for r in rows)
    assert any(float(r[5]) > 0 for r in rows)  # sd populated with 2 reps
    assert (out / "results.txt").exists()


def test_simulate_identical_reruns(tmp_path):
    args = ["simulate", "--preset", "table1", "--reps", 2, "--seed", 7,
            "--methods", "lasso", "--grid-size", 6, "--folds", 3]
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert run(args + ["--out", out1]) == 0
    assert run(args + ["--out", out2]) == 0
    assert read_bytes_except_manifest(out1) == read_bytes_except_manifest(out2)


def test_simulate_unknown_preset_lists_valid(capsys):
    assert run(["simulate", "--preset", "table9", "--out", "x"]) == EXIT_CONFIG
    err = capsys.readouterr().err
    assert "table1" in err and "table4" in err


def test_simulate_config_file_with_flag_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("[spec]\nn = 20\nd = 10\ns = 2\nreps = 3\n[methods]\nmethods = lasso\ngrid_size = 5\nfolds = 3\n")
    out = tmp_path / "sim"
    assert run(["simulate", "--config", cfg, "--reps", 2, "--out", out]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["n"] == 20      # from file
    assert manifest["config"]["reps"] == 2    # flag beats file
    assert manifest["config"]["tau"] == "0.5"  # default

    bad = tmp_path / "bad.cfg"
    bad.write_text("[spec]\nnn = 20\n")
    assert run(["simulate", "--config", bad, "--out", out]) == EXIT_CONFIG


def test_fit_lasso_writes_theta(toy_csv, tmp_path):
    out = tmp_path / "fit"
    code = run(["fit", "--data", toy_csv, "--response", "y", "--method", "lasso",
                "--grid-size", 8, "--folds", 3, "--out", out])
    assert code == 0
    lines = (out / "theta.csv").read_text().splitlines()
    assert lines[0] == "theta"
    assert len(lines) == 6
    assert (out / "params.json").exists()
    summary = json.loads((out / "fit_summary.json").read_text())
    assert summary["method"] == "lasso" and "penalty" in summary


def test_fit_lmc_records_cv_initialization(toy_csv, tmp_path):
    out = tmp_path / "fit"
    code = run(["fit", "--data", toy_csv, "--response", "y", "--method", "lmc",
                "--n-iter", 400, "--burn-in", 100, "--grid-size", 6, "--folds", 3,
                "--out", out])
    assert code == 0
    summary = json.loads((out / "fit_summary.json").read_text())
    assert summary["init"] == "cv_lasso"
    assert "init_penalty" in summary and "eta" in summary
    assert (out / "chain_summary.csv").exists()


def test_fit_rejects_bad_tau(toy_csv, tmp_path, capsys):
    code = run(["fit", "--data", toy_csv, "--response", "y", "--tau", 1.2,
                "--out", tmp_path / "x"])
    assert code == EXIT_CONFIG
    assert "tau" in capsys.readouterr().err


def test_fit_missing_file_is_io_error(tmp_path):
    code = run(["fit", "--data", tmp_path / "nope.csv", "--response", "y",
                "--out", tmp_path / "x"])
    assert code == EXIT_IO


def test_predict_zero_model_returns_inverse_transformed_zero(toy_csv, tmp_path):
    fit_dir = tmp_path / "fit"
    # huge fixed penalty kills every coordinate
    assert run(["fit", "--data", toy_csv, "--response", "y", "--method", "lasso",
                "--penalty", 1e6, "--out", fit_dir]) == 0
    theta = [float(v) for v in (fit_dir / "theta.csv").read_text().splitlines()[1:]]
    assert all(v == 0.0 for v in theta)
    pred_dir = tmp_path / "pred"
    assert run(["predict", "--model", fit_dir, "--data", toy_csv, "--out", pred_dir]) == 0
    predictions = [
        float(v) for v in (pred_dir / "predictions.csv").read_text().splitlines()[1:]
    ]
    params = json.loads((fit_dir / "params.json").read_text())
    assert all(p == pytest.approx(params["y_mean"], rel=1e-12) for p in predictions)


def test_fit_then_predict_reproduces_training_mpe(toy_csv, tmp_path):
    fit_dir = tmp_path / "fit"
    assert run(["fit", "--data", toy_csv, "--response", "y", "--method", "lasso",
                "--grid-size", 6, "--folds", 3, "--out", fit_dir]) == 0
    summary = json.loads((fit_dir / "fit_summary.json").read_text())
    pred_dir = tmp_path / "pred"
    assert run(["predict", "--model", fit_dir, "--data", toy_csv, "--out", pred_dir]) == 0
    predicted_mpe = float((pred_dir / "mpe.txt").read_text())
    assert abs(predicted_mpe - summary["train_mpe"]) < 1e-12


def test_predict_without_response_column_gives_predictions_only(toy_csv, tmp_path):
    fit_dir = tmp_path / "fit"
    assert run(["fit", "--data", toy_csv, "--response", "y", "--method", "lasso",
                "--penalty", 0.1, "--out", fit_dir]) == 0
    stripped = tmp_path / "noy.csv"
    lines = toy_csv.read_text().splitlines()
    header = lines[0].split(",")
    keep = [i for i, h in enumerate(header) if h != "y"]
    stripped.write_text(
        "\n".join(",".join(line.split(",")[i] for i in keep) for line in lines) + "\n"
    )
    pred_dir = tmp_path / "pred"
    assert run(["predict", "--model", fit_dir, "--data", stripped, "--out", pred_dir]) == 0
    assert (pred_dir / "predictions.csv").exists()
    assert not (pred_dir / "mpe.txt").exists()


def test_log_response_predictions_are_exp_of_mean(tmp_path):
    rng = np.random.default_rng(3)
    x = rng.standard_normal((20, 3))
    y = np.exp(0.1 * rng.standard_normal(20) + 1.0)
    path = tmp_path / "pos.csv"
    dataset_to_csv(Dataset(x, y), path, response="y")
    fit_dir = tmp_path / "fit"
    assert run(["fit", "--data", path, "--response", "y", "--method", "lasso",
                "--penalty", 1e6, "--log-response", "--out", fit_dir]) == 0
    pred_dir = tmp_path / "pred"
    assert run(["predict", "--model", fit_dir, "--data", path, "--out", pred_dir]) == 0
    predictions = [
        float(v) for v in (pred_dir / "predictions.csv").read_text().splitlines()[1:]
    ]
    expected = math.exp(float(np.mean(np.log(y))))
    assert all(p == pytest.approx(expected, rel=1e-12) for p in predictions)


def test_scaling_tiny_grid_emits_slope(tmp_path, capsys):
    out = tmp_path / "sc"
    code = run(["scaling", "--n-grid", "16,24,32", "--reps", 2, "--s", 2,
                "--n-iter", 200, "--burn-in", 50, "--thin", 2,
                "--grid-size", 5, "--folds", 3, "--out", out])
    assert code == 0
    assert "slope" in capsys.readouterr().out
    lines = (out / "scaling.csv").read_text().splitlines()
    assert lines[0] == "n,mean_mse,sd,theoretical_delta"
    assert len(lines) == 4
    assert "slope" in (out / "scaling_summary.txt").read_text()


def test_scaling_fastcheck_preset(tmp_path, capsys):
    out = tmp_path / "fastcheck"
    assert run(["scaling", "--preset", "fastcheck", "--threads", 4, "--out", out]) == 0
    assert "slope" in capsys.readouterr().out
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["n_grid"] == "50,100,200"
    assert manifest["config"]["n_iter"] == 2000


def test_scaling_unknown_preset(capsys):
    assert run(["scaling", "--preset", "huge", "--out", "x"]) == EXIT_CONFIG
    assert "fastcheck" in capsys.readouterr().err


def test_replay_reproduces_fit_outputs(toy_csv, tmp_path):
    fit_dir = tmp_path / "fit"
    assert run(["fit", "--data", toy_csv, "--response", "y", "--method", "lmc",
                "--n-iter", 300, "--burn-in", 50, "--grid-size", 5, "--folds", 3,
                "--out", fit_dir]) == 0
    replay_dir = tmp_path / "replayed"
    assert run(["replay", fit_dir / "manifest.json", "--out", replay_dir]) == 0
    assert read_bytes_except_manifest(fit_dir) == read_bytes_except_manifest(replay_dir)
