# tests/test_bench.py
import pytest

from gearsim.config import load_preset
from gearsim.errors import ConfigError
from gearsim.services.bench_service import GROWTH_LIMIT, REPORT_COLUMNS, BenchSizes, _row, run_benchmarks

SMALL = BenchSizes(strain_points=64, n_cyc=16, z_points=50, jacobian_cycles=2, steps_per_cycle=16, repeats=1)


def test_small_benchmarks_check_equivalence_and_report_only():
    report = run_benchmarks(load_preset("tooth_breakage").config, SMALL)
    assert tuple(report.columns) == REPORT_COLUMNS
    assert list(report["kernel"]) == [
        "strain_energy", "strain_energy_growth", "strain_energy_naive_growth", "stiffness_assembly", "jacobian_stepping",
    ]
    assert not report["asserted"].any()
    assert report["passed"].all()
    assert (report["reference_s"] >= 0).all()


def test_kernel_selection():
    report = run_benchmarks(load_preset("pitting").config, SMALL, ("assembly",))
    assert list(report["size"]) == ["N_cyc=16,M=50"]
    with pytest.raises(ConfigError, match="unknown"):
        run_benchmarks(load_preset("pitting").config, SMALL, ("fft",))


@pytest.mark.parametrize("field, value", [("strain_points", 8), ("strain_points", 49), ("steps_per_cycle", 2), ("repeats", 0)])
def test_degenerate_sizes(field, value):
    with pytest.raises(ConfigError):
        BenchSizes(**{field: value})


def test_growth_rows_bound_the_right_side():
    fast = _row("strain_energy_growth", "N=1000->4000", 1.0, 5.0, GROWTH_LIMIT, True)
    assert fast["passed"]
    naive = _row("strain_energy_naive_growth", "N=4000->16000", 1.0, 5.0, GROWTH_LIMIT, True, floor=True)
    assert not naive["passed"]
    assert _row("strain_energy_naive_growth", "N=4000->16000", 1.0, 14.0, GROWTH_LIMIT, True, floor=True)["passed"]
    assert _row("strain_energy_naive_growth", "N=64->256", 1.0, 2.0, GROWTH_LIMIT, False, floor=True)["passed"]


def test_naive_growth_is_reported_against_the_reference():
    report = run_benchmarks(load_preset("tooth_breakage").config, SMALL, ("strain_energy",)).set_index("kernel")
    row = report.loc["strain_energy_naive_growth"]
    assert row["reference_s"] == report.loc["strain_energy", "reference_s"]
    assert row["limit"] == GROWTH_LIMIT
    assert not row["asserted"]
