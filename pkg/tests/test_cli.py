# tests/test_cli.py
import json

import numpy as np
import pandas as pd
import pytest
import typer
from typer.testing import CliRunner

from gearsim.main import app
from gearsim.services.feature_service import CI_TABLE_FILE, DIFF_FILE
from gearsim.services.simulation_service import INDEX_FILE, MANIFEST_FILE, SIGNAL_FILE

from conftest import synthetic_dataset

runner = CliRunner()


@pytest.fixture
def config_file(tmp_path, config_factory):
    path = tmp_path / "run.json"
    path.write_text(json.dumps(config_factory(measurement_noise_std=0.01).model_dump(mode="json")))
    return path


def invoke(*args):
    return runner.invoke(app, [str(a) for a in args])


def test_simulate_writes_signal_and_manifest(config_file, tmp_path):
    out = tmp_path / "sim"
    result = invoke("simulate", "-c", config_file, "-o", out, "--seed", 3)
    assert result.exit_code == 0, result.output
    manifest = json.loads((out / MANIFEST_FILE).read_text())
    assert manifest["seed"] == 3
    assert manifest["profile_error_seed"] == 3
    assert (out / SIGNAL_FILE).exists()

    again = tmp_path / "sim_again"
    assert invoke("simulate", "-c", config_file, "-o", again, "--seed", 3).exit_code == 0
    assert (again / SIGNAL_FILE).read_bytes() == (out / SIGNAL_FILE).read_bytes()


def test_simulate_accepts_a_manifest_as_config(config_file, tmp_path):
    first = tmp_path / "first"
    assert invoke("simulate", "-c", config_file, "-o", first, "-f", "breakage:0.25").exit_code == 0
    second = tmp_path / "second"
    assert invoke("simulate", "-c", first / MANIFEST_FILE, "-o", second).exit_code == 0
    manifest = json.loads((second / MANIFEST_FILE).read_text())
    assert manifest["health_state"] == "tooth_breakage_0.25_gear0"
    assert (second / SIGNAL_FILE).read_bytes() == (first / SIGNAL_FILE).read_bytes()


@pytest.mark.parametrize("payload", ["{broken", json.dumps({"pinion": {"tooth_count": 3}})])
def test_malformed_config_exits_with_config_code(tmp_path, payload):
    path = tmp_path / "bad.json"
    path.write_text(payload)
    result = invoke("simulate", "-c", path, "-o", tmp_path / "out")
    assert result.exit_code == 2
    assert not (tmp_path / "out" / MANIFEST_FILE).exists()


def test_bad_fault_and_missing_source(tmp_path):
    assert invoke("simulate", "-p", "pitting", "-f", "cracked:1", "-o", tmp_path).exit_code == 2
    assert invoke("simulate", "-o", tmp_path).exit_code == 2
    assert invoke("simulate", "-c", tmp_path / "absent.json", "-o", tmp_path).exit_code == 4


def test_batch_then_features(config_file, tmp_path):
    out = tmp_path / "batch"
    result = invoke("batch", "-c", config_file, "-n", 2, "-w", 1, "-o", out)
    assert result.exit_code == 0, result.output
    index = json.loads((out / INDEX_FILE).read_text())
    assert [r["status"] for r in index["runs"]] == ["ok", "ok"]

    features = tmp_path / "features"
    result = invoke("features", out, "--points-per-rev", 256, "-o", features)
    assert result.exit_code == 0, result.output
    ci = pd.read_csv(features / CI_TABLE_FILE)
    assert list(ci["signal"]) == ["run_0000", "run_0001"]
    assert ci["diff_rms"].mean() == pytest.approx(1.0, rel=1e-9)


def write_feature_dir(path, dataset):
    path.mkdir(parents=True)
    pd.DataFrame({"signal": dataset.names, "label": dataset.labels}).to_csv(path / CI_TABLE_FILE, index=False)
    angle = 2 * np.pi * np.arange(dataset.points_per_rev) / dataset.points_per_rev
    frame = pd.DataFrame({"angle_rad": angle, **{n: s for n, s in zip(dataset.names, dataset.signals)}})
    frame.to_csv(path / DIFF_FILE, index=False, float_format="%.17g")


def test_enhance_matches_a_dataset_to_itself(tmp_path):
    features = tmp_path / "features"
    write_feature_dir(features, synthetic_dataset())
    grid = tmp_path / "grid.json"
    grid.write_text(json.dumps({"width_ratios": [0.5, 1.0], "fault_to_harmonics": [0.5, 1.0],
                                "noise_levels": [0.0, 0.3], "n_noise": 1}))
    out = tmp_path / "enhanced"
    result = invoke("enhance", features, features, "--grid", grid, "-w", 1, "-o", out)
    assert result.exit_code == 0, result.output
    summary = json.loads((out / "summary.json").read_text())
    assert summary["best_params"] == {"width_ratio": 1.0, "fault_to_harmonics": 1.0, "noise_level": 0.0}
    assert summary["score"] == pytest.approx(0.0, abs=1e-9)
    table = pd.read_csv(out / "error_table.csv")
    assert len(table) == 8
    assert (out / "breakdown.csv").exists()


def test_enhance_rejects_a_bad_grid(tmp_path):
    features = tmp_path / "features"
    write_feature_dir(features, synthetic_dataset())
    grid = tmp_path / "grid.json"
    grid.write_text(json.dumps({"width_ratios": [-1.0], "fault_to_harmonics": [1.0], "noise_levels": [0.0]}))
    assert invoke("enhance", features, features, "--grid", grid, "-o", tmp_path / "out").exit_code == 2


def test_replay_reports_the_stored_selection(tmp_path):
    result = invoke("replay", "pitting", "-o", tmp_path)
    assert result.exit_code == 0, result.output
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["best_params"] == pytest.approx({"width_ratio": 0.155, "fault_to_harmonics": 1.91,
                                                    "noise_level": 1.995})
    assert invoke("replay", "gearbox").exit_code == 2


def test_presets_listing_and_show():
    listing = invoke("presets")
    assert listing.exit_code == 0
    assert "17/38" in listing.stdout
    shown = invoke("presets", "--show", "involute-destruction")
    assert shown.exit_code == 0
    assert json.loads(shown.stdout)["config"]["pinion"]["tooth_count"] == 18


def test_plot_data(config_file, tmp_path):
    out = tmp_path / "plots"
    result = invoke("plot-data", "-c", config_file, "-f", "pitting:0.1:axial=0.5", "-o", out)
    assert result.exit_code == 0, result.output
    for name in ("profiles.csv", "mesh_stiffness.csv", "profile_errors_pinion.csv", "profile_errors_gear.csv"):
        assert (out / name).exists()
    assert not (out / "sync_average_input.csv").exists()


def test_bench_small_sizes(tmp_path):
    result = invoke("bench", "-k", "assembly", "--n-cyc", 8, "--z-points", 50, "--repeats", 1, "-o", tmp_path)
    assert result.exit_code == 0, result.output
    report = pd.read_csv(tmp_path / "bench_report.csv")
    assert list(report["kernel"]) == ["stiffness_assembly"]


@pytest.mark.parametrize("command, flags", [
    ("simulate", ("--config", "--preset", "--fault", "--seed", "--profile-error-seed", "--duration",
                  "--din-grade", "--noise-std", "--output")),
    ("batch", ("--n-signals", "--base-seed", "--workers")),
    ("features", ("--shaft", "--points-per-rev", "--sidebands", "--harmonics", "--mesh-order", "--shaft-ratio")),
    ("enhance", ("--grid", "--seed", "--n-noise", "--workers")),
    ("bench", ("--strain-points", "--n-cyc", "--z-points", "--cycles", "--steps-per-cycle", "--kernel")),
    ("plot-data", ("--run", "--points-per-rev")),
])
def test_help_lists_every_flag(command, flags):
    assert runner.invoke(app, [command, "--help"]).exit_code == 0
    click_command = typer.main.get_command(app).commands[command]
    declared = {opt for param in click_command.params for opt in param.opts if not getattr(param, "hidden", False)}
    assert set(flags) <= declared
