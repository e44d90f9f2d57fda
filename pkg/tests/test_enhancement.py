# tests/test_enhancement.py
import numpy as np
import pandas as pd
import pytest

from gearsim.config import load_ci_tables
from gearsim.errors import ConfigError
from gearsim.schemas.enhancement import EnhancementParams, GridSpec, SignalDataset
from gearsim.schemas.signal import DifferenceSignal
from gearsim.services.enhancement_service import (
    ci_error,
    energy_centroid,
    enhance_dataset,
    inject_noise,
    log_indicators,
    mix_fault_harmonics,
    modify_width,
    replay_ci_tables,
    tune,
)


def pulse(points: int = 256, centre: float = 128.0, width: float = 8.0) -> np.ndarray:
    k = np.arange(points)
    return np.exp(-0.5 * ((k - centre) / width) ** 2)


def test_unit_width_ratio_is_the_identity():
    x = np.random.default_rng(0).standard_normal(128)
    np.testing.assert_array_equal(modify_width(DifferenceSignal(signal=x), 1.0).signal, x)


def test_halving_the_width_narrows_a_pulse_about_its_centroid():
    x = pulse()
    assert energy_centroid(x) == pytest.approx(128.0, abs=1e-9)
    narrowed = modify_width(DifferenceSignal(signal=x), 0.5).signal
    np.testing.assert_allclose(narrowed, pulse(width=4.0), atol=1e-3)


def test_halving_then_doubling_the_width_restores_a_smooth_pulse():
    x = pulse()
    narrowed = modify_width(DifferenceSignal(signal=x), 0.5)
    restored = modify_width(narrowed, 2.0).signal
    np.testing.assert_allclose(restored, x, atol=2e-3)
    assert energy_centroid(restored) == pytest.approx(128.0, abs=1e-6)


def test_stretching_zero_fills_outside_the_record():
    x = np.ones(64)
    stretched = modify_width(DifferenceSignal(signal=x), 2.0).signal
    np.testing.assert_allclose(stretched, np.ones(64), atol=1e-12)
    shrunk = modify_width(DifferenceSignal(signal=x), 0.25).signal
    assert np.all(shrunk[:20] == 0.0)
    assert np.all(shrunk[-20:] == 0.0)


@pytest.mark.parametrize("ratio", [0.0, -1.0, 0.01])
def test_degenerate_width_ratio_rejected(ratio):
    with pytest.raises(ConfigError):
        modify_width(DifferenceSignal(signal=pulse()), ratio)


@pytest.mark.parametrize("alpha", [0.0, 1.0, 2.25])
def test_mixing(alpha):
    rng = np.random.default_rng(1)
    x, h = rng.standard_normal(64), rng.standard_normal(64)
    mixed = mix_fault_harmonics(DifferenceSignal(signal=x), DifferenceSignal(signal=h), alpha).signal
    np.testing.assert_allclose(mixed, alpha * x + (1 - alpha) * h, rtol=1e-14)
    if alpha == 1.0:
        np.testing.assert_array_equal(mixed, x)


def test_mixing_needs_equal_lengths():
    with pytest.raises(ConfigError):
        mix_fault_harmonics(DifferenceSignal(signal=np.zeros(8)), DifferenceSignal(signal=np.zeros(16)), 0.5)


def test_noise_injection():
    x = np.zeros(50_000)
    np.testing.assert_array_equal(inject_noise(x, 0.0, 3, 2), np.zeros((2, 50_000)))
    noisy = inject_noise(x, 0.5, 3, 2)
    assert noisy.shape == (2, 50_000)
    assert np.var(noisy) == pytest.approx(0.25, rel=0.03)
    np.testing.assert_array_equal(noisy, inject_noise(x, 0.5, 3, 2))
    assert not np.array_equal(noisy, inject_noise(x, 0.5, 4, 2))
    with pytest.raises(ConfigError):
        inject_noise(x, -0.1, 3)


def test_log_indicators_reject_flat_signals():
    with pytest.raises(ConfigError):
        log_indicators(np.ones((2, 32)), ["log_diff_rms"])


def ci_frame(rows):
    return pd.DataFrame(rows, columns=["label", "log_diff_rms"])


def test_one_sigma_offset_scores_one():
    exp = ci_frame([("healthy", 0.0), ("healthy", 2.0), ("worn", 4.0), ("worn", 6.0)])
    sigma = exp["log_diff_rms"].std(ddof=1)
    sim = ci_frame([("healthy", 1.0 + sigma), ("worn", 5.0 - sigma)])
    errors, groups = ci_error(sim, exp, ["log_diff_rms"])
    assert groups == ("healthy", "worn")
    np.testing.assert_allclose(errors, [[1.0], [1.0]], rtol=1e-12)


def test_simulated_group_missing_from_measurements():
    exp = ci_frame([("healthy", 0.0), ("healthy", 1.0)])
    sim = ci_frame([("healthy", 0.5), ("cracked", 0.5)])
    with pytest.raises(ConfigError, match="cracked"):
        ci_error(sim, exp, ["log_diff_rms"])


def test_extra_measured_group_is_not_scored():
    exp = ci_frame([("healthy", 0.0), ("healthy", 1.0), ("worn", 3.0)])
    errors, groups = ci_error(ci_frame([("healthy", 0.5)]), exp, ["log_diff_rms"])
    assert groups == ("healthy",)
    assert errors.shape == (1, 1)


def test_flat_measured_spread_rejected():
    exp = ci_frame([("healthy", 1.0), ("healthy", 1.0)])
    with pytest.raises(ConfigError):
        ci_error(ci_frame([("healthy", 1.0)]), exp, ["log_diff_rms"])


SMALL_GRID = dict(width_ratios=[0.5, 1.0], fault_to_harmonics=[0.5, 1.0], noise_levels=[0.0, 0.3], n_noise=1)


def test_dataset_matches_itself_without_enhancement(dataset):
    params, table = tune(dataset, dataset, GridSpec(**SMALL_GRID))
    assert params.as_tuple() == (1.0, 1.0, 0.0)
    assert table.best_score == pytest.approx(0.0, abs=1e-9)
    assert table.errors.shape == (8, 3, 2)
    assert table.groups == ("healthy", "fault_small", "fault_large")
    assert list(table.breakdown["signal"]) == list(dataset.names)


def test_known_enhancement_is_recovered(dataset):
    truth = EnhancementParams(width_ratio=0.5, fault_to_harmonics=1.5, noise_level=0.0)
    measured = enhance_dataset(dataset, truth)
    grid = GridSpec(width_ratios=[0.5, 1.0], fault_to_harmonics=[1.0, 1.5], noise_levels=[0.0, 0.2], n_noise=2)
    params, table = tune(dataset, measured, grid)
    assert params == truth
    assert table.best_score == pytest.approx(0.0, abs=1e-9)


def test_worker_count_does_not_change_the_table(dataset):
    grid = GridSpec(width_ratios=[0.5, 1.0], fault_to_harmonics=[1.0, 2.0], noise_levels=[0.1, 0.4], n_noise=3,
                    seed=11)
    measured = enhance_dataset(dataset, EnhancementParams(width_ratio=1.0, fault_to_harmonics=2.0, noise_level=0.1),
                               seed=99)
    _, serial = tune(dataset, measured, grid, workers=1)
    _, parallel = tune(dataset, measured, grid, workers=2)
    np.testing.assert_array_equal(serial.errors, parallel.errors)
    assert serial.best_index == parallel.best_index


def test_missing_healthy_subset_rejected(dataset):
    faulty_only = SignalDataset(labels=tuple("fault" for _ in dataset.labels), signals=dataset.signals)
    with pytest.raises(ConfigError, match="healthy"):
        tune(faulty_only, dataset, GridSpec(**SMALL_GRID))


def test_points_per_revolution_must_agree(dataset):
    shorter = SignalDataset(labels=dataset.labels, signals=dataset.signals[:, :128])
    with pytest.raises(ConfigError):
        tune(dataset, shorter, GridSpec(**SMALL_GRID))


def test_enhanced_dataset_expands_noise_realizations(dataset):
    params = EnhancementParams(width_ratio=0.8, fault_to_harmonics=1.2, noise_level=0.3)
    out = enhance_dataset(dataset, params, seed=5, n_noise=3)
    assert out.signals.shape == (3 * len(dataset.labels), dataset.points_per_rev)
    assert out.names[:3] == ("signal_0000_n0", "signal_0000_n1", "signal_0000_n2")
    healthy_rms = np.sqrt(np.mean(out.signals[out.mask("healthy")] ** 2, axis=1))
    assert healthy_rms.mean() == pytest.approx(1.0, rel=1e-12)
    again = enhance_dataset(dataset, params, seed=5, n_noise=3)
    np.testing.assert_array_equal(out.signals, again.signals)


def test_default_grid():
    grid = GridSpec.default()
    assert grid.shape == (22, 61, 51)
    assert grid.combination(0).as_tuple() == (0.1, 0.0, 0.0)
    assert grid.combination(1).as_tuple() == (0.1, 0.0, 0.05)
    assert grid.combination(grid.size - 1).as_tuple() == (2.0, 3.0, 2.5)


def test_unknown_indicator_rejected():
    with pytest.raises(ValueError):
        GridSpec(**SMALL_GRID, cis=["crest_factor"])


@pytest.mark.parametrize(
    "name, expected",
    [
        ("tooth_breakage", (0.182, 2.25, 1.585)),
        ("pitting", (0.155, 1.91, 1.995)),
        ("involute_destruction", (0.143, 1.93, 1.22)),
    ],
)
def test_stored_ci_tables_select_the_recorded_parameters(name, expected):
    params, table = replay_ci_tables(load_ci_tables(name))
    assert params.as_tuple() == pytest.approx(expected)
    assert table.best_score == pytest.approx(0.0, abs=1e-9)
    assert np.sum(table.scores <= table.best_score + 1e-9) == 1


def test_malformed_ci_fixture():
    with pytest.raises(ConfigError):
        replay_ci_tables({"ci_columns": ["log_diff_rms"]})
    with pytest.raises(ConfigError):
        replay_ci_tables({"ci_columns": ["log_diff_rms"], "experimental": [], "combinations": []})
