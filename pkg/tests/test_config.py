# tests/test_config.py
import json
from pathlib import Path

import pytest
from pydantic import ValidationError

from gearsim.config import (
    DEFAULT_OUTPUT_DIR,
    available_ci_tables,
    available_presets,
    cli_overrides,
    get_default_workers,
    get_output_dir,
    load_ci_tables,
    load_preset,
    load_run_config,
    parse_fault,
)
from gearsim.errors import ConfigError, StorageError
from gearsim.schemas.fault import Healthy, InvoluteDestruction, Pitting, ToothBreakage
from gearsim.schemas.run_config import RunConfig


def test_fault_grammar():
    assert parse_fault("healthy") == Healthy()
    assert parse_fault("breakage:0.5:tooth=3") == ToothBreakage(tip_loss_fraction=0.5, tooth_index=3)
    assert parse_fault("breakage:1:wheel=pinion").wheel == "pinion"
    pitting = parse_fault("pitting:0.2:axial=0.25:teeth=4,1,4")
    assert isinstance(pitting, Pitting)
    assert pitting.tooth_indices == [1, 4]
    assert pitting.label == "pitting_d0.2_a0.25_p0.5_r0.1_gear1-4"
    involute = parse_fault("involute:20:teeth=0,1")
    assert involute == InvoluteDestruction(deviation_amplitude_um=20.0, tooth_indices=[0, 1])


@pytest.mark.parametrize("text", [
    "cracked:1",
    "breakage",
    "breakage:x",
    "breakage:1.5",
    "breakage:0.5:teeth=1",
    "breakage:0.5:tooth",
    "healthy:1",
    "pitting:0.2:teeth=a",
])
def test_bad_fault_descriptions(text):
    with pytest.raises(ConfigError):
        parse_fault(text)


def test_labels():
    assert ToothBreakage(tip_loss_fraction=0.0, tooth_index=5).label == "healthy"
    assert ToothBreakage(tip_loss_fraction=0.25).label == "tooth_breakage_0.25_gear0"
    assert ToothBreakage(tip_loss_fraction=0.25, tooth_index=3, wheel="pinion").label == "tooth_breakage_0.25_pinion3"
    assert InvoluteDestruction(deviation_amplitude_um=10, tooth_indices=[1, 0]).label == "involute_destruction_10_gear0-1"
    assert InvoluteDestruction(deviation_amplitude_um=0, tooth_indices=[0]).label == "healthy"


def test_labels_separate_fault_cases():
    shallow = Pitting(pit_depth_mm=0.1, axial_extent_fraction=0.5, tooth_indices=[0])
    deep = Pitting(pit_depth_mm=0.5, axial_extent_fraction=0.5, tooth_indices=[0])
    assert shallow.label != deep.label
    assert shallow.label != shallow.model_copy(update={"tooth_indices": [2]}).label
    assert shallow.label != shallow.model_copy(update={"flank_position": 0.3}).label
    breakages = {ToothBreakage(tip_loss_fraction=0.5, tooth_index=i, wheel=w).label
                 for i in (0, 1) for w in ("pinion", "gear")}
    assert len(breakages) == 4


def test_preset_with_overrides():
    overrides = cli_overrides(fault="breakage:0.5:tooth=2", seed=9, duration=2.0, noise_std=0.1)
    config = load_run_config(preset="tooth-breakage", overrides=overrides)
    assert config.fault == ToothBreakage(tip_loss_fraction=0.5, tooth_index=2)
    assert config.seed == 9
    assert config.error_seed == 9
    assert config.conditions.duration_s == 2.0
    assert config.conditions.input_speed_hz == 40.0
    assert config.measurement_noise_std == 0.1


def test_profile_error_seed_is_independent_of_run_seed():
    config = load_run_config(preset="pitting", overrides=cli_overrides(seed=3, profile_error_seed=8))
    assert (config.seed, config.error_seed) == (3, 8)


def test_config_source_must_be_unique(tmp_path):
    with pytest.raises(ConfigError):
        load_run_config()
    with pytest.raises(ConfigError):
        load_run_config(tmp_path / "x.json", "pitting")


def test_config_file_errors(tmp_path):
    with pytest.raises(StorageError):
        load_run_config(tmp_path / "missing.json")
    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    with pytest.raises(ConfigError):
        load_run_config(broken)
    listed = tmp_path / "list.json"
    listed.write_text("[1, 2]")
    with pytest.raises(ConfigError):
        load_run_config(listed)


def test_schema_violations_surface_as_validation_errors(tmp_path):
    payload = load_preset("tooth_breakage").config.model_dump(mode="json")
    payload["pinion"]["tooth_count"] = 3
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(payload))
    with pytest.raises(ValidationError):
        load_run_config(path)


def test_undersampled_run_rejected():
    payload = load_preset("tooth_breakage").config.model_dump(mode="json")
    payload["conditions"]["sampling_rate_hz"] = 10_000.0
    with pytest.raises(ValidationError, match="mesh frequency"):
        RunConfig.model_validate(payload)


def test_fault_tooth_out_of_range():
    payload = load_preset("tooth_breakage").config.model_dump(mode="json")
    payload["fault"] = {"kind": "tooth_breakage", "tip_loss_fraction": 0.5, "tooth_index": 38}
    with pytest.raises(ValidationError, match="out of range"):
        RunConfig.model_validate(payload)


def test_fault_tooth_checked_without_severity():
    payload = load_preset("tooth_breakage").config.model_dump(mode="json")
    payload["fault"] = {"kind": "tooth_breakage", "tip_loss_fraction": 0.0, "tooth_index": 38}
    with pytest.raises(ValidationError, match="out of range"):
        RunConfig.model_validate(payload)
    payload["fault"] = {"kind": "involute_destruction", "deviation_amplitude_um": 0.0, "tooth_indices": [40]}
    with pytest.raises(ValidationError, match="out of range"):
        RunConfig.model_validate(payload)
    payload["fault"] = {"kind": "tooth_breakage", "tip_loss_fraction": 0.0, "tooth_index": 37}
    assert RunConfig.model_validate(payload).fault.label == "healthy"


def test_manifest_is_accepted_as_config(tmp_path):
    config = load_preset("pitting").config
    manifest = {"config": config.model_dump(mode="json"), "profile_error_hash": "abc"}
    path = tmp_path / "manifest.json"
    path.write_text(json.dumps(manifest))
    assert load_run_config(path) == config


def test_output_dir_precedence(monkeypatch):
    config = load_preset("pitting").config.model_copy(update={"output_dir": "from_config"})
    assert get_output_dir(None, None) == Path(DEFAULT_OUTPUT_DIR)
    assert get_output_dir(None, config) == Path("from_config")
    monkeypatch.setenv("GEARSIM_OUTPUT_DIR", "from_env")
    assert get_output_dir(None, config) == Path("from_env")
    assert get_output_dir(Path("from_cli"), config) == Path("from_cli")


def test_worker_count_from_environment(monkeypatch):
    monkeypatch.setenv("GEARSIM_WORKERS", "3")
    assert get_default_workers() == 3
    monkeypatch.setenv("GEARSIM_WORKERS", "0")
    with pytest.raises(ConfigError):
        get_default_workers()
    monkeypatch.setenv("GEARSIM_WORKERS", "many")
    with pytest.raises(ConfigError):
        get_default_workers()
    monkeypatch.delenv("GEARSIM_WORKERS")
    assert get_default_workers() >= 1


@pytest.mark.parametrize("name, teeth, mesh_hz, rate", [
    ("tooth_breakage", (17, 38), 680.0, 25_000.0),
    ("pitting", (17, 38), 680.0, 25_000.0),
    ("involute_destruction", (18, 35), 810.0, 50_000.0),
])
def test_shipped_preset_setups(name, teeth, mesh_hz, rate):
    preset = load_preset(name)
    config = preset.config
    assert (config.pinion.tooth_count, config.gear.tooth_count) == teeth
    assert config.conditions.mesh_frequency(config.pinion.tooth_count) == pytest.approx(mesh_hz)
    assert config.conditions.sampling_rate_hz == rate
    assert preset.cases >= 1 and preset.records >= 1
    assert isinstance(config.fault, Healthy)


def test_preset_lookup():
    assert available_presets() == ["involute_destruction", "pitting", "tooth_breakage"]
    assert load_preset("tooth-breakage") == load_preset("tooth_breakage")
    with pytest.raises(ConfigError, match="available"):
        load_preset("gearbox")


def test_shipped_ci_tables_match_presets():
    assert available_ci_tables() == available_presets()
    fixture = load_ci_tables("involute-destruction")
    assert fixture["ci_columns"] == ["log_diff_rms", "log_diff_kurtosis"]
    with pytest.raises(ConfigError):
        load_ci_tables("gearbox")
