# gearsim/services/bench_service.py
import dataclasses
import time
from dataclasses import dataclass
from typing import Callable, Dict, List, Tuple

import numpy as np
import pandas as pd

from gearsim.errors import BenchmarkError, ConfigError
from gearsim.schemas.fault import Healthy
from gearsim.schemas.run_config import RunConfig, SolverSettings
from gearsim.services.assembly_service import (
    LAYOUT,
    assemble_constant_stiffness,
    assemble_stiffness_cycle_fast,
    assemble_stiffness_cycle_naive,
    build_dynamic_model,
    mesh_geometry_coefficients,
    midpoint_z_grid,
)
from gearsim.services.geometry_service import build_tooth_profile, zero_profile_errors
from gearsim.services.logger import AppLogger
from gearsim.services.solver_service import integrate
from gearsim.services.stiffness_service import (
    axial_shear_energies,
    axial_shear_energies_naive,
    bending_energy_fast,
    bending_energy_naive,
    gms_over_cycle,
    load_at_radius,
)

logger = AppLogger.get_logger(__name__)

REPORT_COLUMNS = ("kernel", "size", "reference_s", "candidate_s", "ratio", "limit", "asserted", "passed")

# candidate / reference runtime ceilings
STRAIN_ENERGY_LIMIT = 0.1
ASSEMBLY_LIMIT = 0.1
JACOBIAN_LIMIT = 0.2
GROWTH_LIMIT = 8.0

# below these sizes timings are reported only
MIN_ASSERTED_POINTS = 1000
# the naive kernel is loop-bound until its slices get long
MIN_ASSERTED_NAIVE_GROWTH_POINTS = 4000
MIN_ASSERTED_Z_POINTS = 100
MIN_ASSERTED_STEPS_PER_CYCLE = 50


@dataclass(frozen=True)
class BenchSizes:
    strain_points: int = 8000
    n_cyc: int = 512
    z_points: int = 1000
    jacobian_cycles: int = 10
    steps_per_cycle: int = 64
    repeats: int = 3

    def __post_init__(self):
        if self.strain_points < 50 or self.n_cyc < 1 or self.z_points < 1:
            raise ConfigError("benchmark sizes are too small")
        if self.jacobian_cycles < 1 or self.steps_per_cycle < 4 or self.repeats < 1:
            raise ConfigError("benchmark sizes are too small")


def _best_time(fn: Callable[[], object], repeats: int) -> float:
    best = np.inf
    for _ in range(repeats):
        started = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - started)
    return float(best)


def _row(kernel: str, size: str, reference: float, candidate: float, limit: float, asserted: bool,
         floor: bool = False) -> Dict:
    ratio = candidate / reference if reference > 0 else np.inf
    met = ratio > limit if floor else ratio <= limit
    return {
        "kernel": kernel,
        "size": size,
        "reference_s": reference,
        "candidate_s": candidate,
        "ratio": ratio,
        "limit": limit,
        "asserted": asserted,
        "passed": bool(met) if asserted else True,
    }


def _check_close(kernel: str, reference: np.ndarray, candidate: np.ndarray, rtol: float) -> None:
    ref = np.asarray(reference, dtype=float)
    cand = np.asarray(candidate, dtype=float)
    finite = np.isfinite(ref)
    if not np.array_equal(finite, np.isfinite(cand)):
        raise BenchmarkError(f"{kernel}: reference and candidate disagree on singular sections")
    scale = float(np.max(np.abs(ref[finite]))) if finite.any() else 1.0
    err = float(np.max(np.abs(ref[finite] - cand[finite]))) / (scale or 1.0) if finite.any() else 0.0
    if err > rtol:
        raise BenchmarkError(f"{kernel}: candidate deviates from reference by {err:.3e} (tolerance {rtol:g})")
    logger.info(f"{kernel}: equivalent to reference (max relative deviation {err:.2e})")


def bench_strain_energy(config: RunConfig, sizes: BenchSizes) -> List[Dict]:
    spec = config.pinion
    n = sizes.strain_points
    profile = build_tooth_profile(spec, n_points=n)
    load = load_at_radius(profile, spec.pitch_radius)

    def naive():
        return bending_energy_naive(profile, load), axial_shear_energies_naive(profile, load)

    def fast():
        return bending_energy_fast(profile, load), axial_shear_energies(profile, load)

    (b_ref, (a_ref, s_ref)), (b_fast, (a_fast, s_fast)) = naive(), fast()
    for name, ref, cand in (("bending", b_ref, b_fast), ("axial", a_ref, a_fast), ("shear", s_ref, s_fast)):
        _check_close(f"strain_energy/{name}", ref, cand, 1e-10)

    asserted = n >= MIN_ASSERTED_POINTS
    reference = _best_time(naive, 1)
    candidate = _best_time(fast, sizes.repeats)
    rows = [_row("strain_energy", f"N={n}", reference, candidate, STRAIN_ENERGY_LIMIT, asserted)]

    # the fast path must stay close to linear in N
    big = build_tooth_profile(spec, n_points=4 * n)
    big_load = load_at_radius(big, spec.pitch_radius)
    grown = _best_time(lambda: (bending_energy_fast(big, big_load), axial_shear_energies(big, big_load)),
                       sizes.repeats)
    rows.append(_row("strain_energy_growth", f"N={n}->{4 * n}", candidate, grown, GROWTH_LIMIT, asserted))

    # the reference grows quadratically
    grown_naive = _best_time(lambda: (bending_energy_naive(big, big_load),
                                      axial_shear_energies_naive(big, big_load)), 1)
    rows.append(_row("strain_energy_naive_growth", f"N={n}->{4 * n}", reference, grown_naive, GROWTH_LIMIT,
                     n >= MIN_ASSERTED_NAIVE_GROWTH_POINTS, floor=True))
    return rows


def bench_assembly(config: RunConfig, sizes: BenchSizes) -> List[Dict]:
    coeffs = mesh_geometry_coefficients(config.pair, config.structure, LAYOUT)
    k_const = assemble_constant_stiffness(config.structure, LAYOUT)
    phase = np.arange(sizes.n_cyc) / sizes.n_cyc
    gms = 3.0e8 + 1.0e8 * (phase < 0.6)
    z_grid = midpoint_z_grid(coeffs.face_width, sizes.z_points)

    reference_k = assemble_stiffness_cycle_naive(gms, k_const, coeffs, z_grid)
    candidate_k = assemble_stiffness_cycle_fast(gms, k_const, coeffs)
    rel = float(np.linalg.norm(reference_k - candidate_k) / np.linalg.norm(reference_k))
    if rel > 1e-8:
        raise BenchmarkError(f"stiffness assembly: Frobenius deviation {rel:.3e} exceeds 1e-8")
    logger.info(f"stiffness assembly: equivalent to reference (Frobenius deviation {rel:.2e})")

    reference = _best_time(lambda: assemble_stiffness_cycle_naive(gms, k_const, coeffs, z_grid), 1)
    candidate = _best_time(lambda: assemble_stiffness_cycle_fast(gms, k_const, coeffs), sizes.repeats)
    asserted = sizes.z_points >= MIN_ASSERTED_Z_POINTS
    return [_row("stiffness_assembly", f"N_cyc={sizes.n_cyc},M={sizes.z_points}", reference, candidate,
                 ASSEMBLY_LIMIT, asserted)]


def _jacobian_model(config: RunConfig, sizes: BenchSizes):
    pair = config.pair
    f_mesh = config.conditions.mesh_frequency(pair.pinion.tooth_count)
    rate = f_mesh * sizes.steps_per_cycle
    conditions = config.conditions.model_copy(update={
        "sampling_rate_hz": rate,
        "duration_s": sizes.jacobian_cycles / f_mesh,
    })
    bench_config = config.model_copy(update={"conditions": conditions, "fault": Healthy()})
    gms = gms_over_cycle(pair, zero_profile_errors(pair), Healthy(), n_cyc=max(64, sizes.steps_per_cycle))
    model = build_dynamic_model(bench_config, gms, LAYOUT)
    # a few mesh cycles are far shorter than an output revolution: no transient window, no tach
    return dataclasses.replace(model, input_speed_hz=None, output_speed_hz=None)


def bench_jacobian(config: RunConfig, sizes: BenchSizes) -> List[Dict]:
    model = _jacobian_model(config, sizes)
    settings = SolverSettings(nr_rel_tol=1e-10, start_from_equilibrium=True)

    cached = integrate(model, settings)
    exact = integrate(model, settings, exact_jacobian=True)
    _check_close("jacobian_stepping", exact.displacements["theta_p"], cached.displacements["theta_p"], 1e-8)
    _check_close("jacobian_stepping/casing", exact.displacements["y_c"], cached.displacements["y_c"], 1e-6)

    reference = _best_time(lambda: integrate(model, settings, exact_jacobian=True), 1)
    candidate = _best_time(lambda: integrate(model, settings), 1)
    asserted = sizes.steps_per_cycle >= MIN_ASSERTED_STEPS_PER_CYCLE
    return [_row("jacobian_stepping", f"cycles={sizes.jacobian_cycles},steps/cycle={sizes.steps_per_cycle}",
                 reference, candidate, JACOBIAN_LIMIT, asserted)]


BENCHMARKS: Dict[str, Callable[[RunConfig, BenchSizes], List[Dict]]] = {
    "strain_energy": bench_strain_energy,
    "assembly": bench_assembly,
    "jacobian": bench_jacobian,
}


def run_benchmarks(config: RunConfig, sizes: BenchSizes,
                   kernels: Tuple[str, ...] = tuple(BENCHMARKS)) -> pd.DataFrame:
    """Equivalence first, then timings; a mismatch raises before anything is timed for that kernel."""
    unknown = [k for k in kernels if k not in BENCHMARKS]
    if unknown:
        raise ConfigError(f"unknown benchmarks {unknown}; choose from {list(BENCHMARKS)}")
    rows: List[Dict] = []
    for kernel in kernels:
        logger.info(f"Benchmarking {kernel}")
        rows.extend(BENCHMARKS[kernel](config, sizes))
    report = pd.DataFrame(rows, columns=list(REPORT_COLUMNS))
    failed = report[~report["passed"]]
    for _, row in failed.iterrows():
        logger.warning(f"{row['kernel']} at {row['size']}: ratio {row['ratio']:.3f} above limit {row['limit']:g}")
    return report
