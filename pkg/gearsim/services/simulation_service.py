# gearsim/services/simulation_service.py
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd
from tqdm import tqdm

from gearsim.errors import ConfigError, GearSimError
from gearsim.schemas.dynamics import SimulationResult
from gearsim.schemas.geometry import ProfileErrorField
from gearsim.schemas.run_config import CONFIG_SCHEMA_VERSION, RunConfig
from gearsim.schemas.stiffness import GmsCurve
from gearsim.services.assembly_service import LAYOUT, build_dynamic_model
from gearsim.services.geometry_service import generate_profile_errors
from gearsim.services.logger import AppLogger
from gearsim.services.solver_service import integrate
from gearsim.services.stiffness_service import gms_over_cycle
from gearsim.services.storage_service import StorageService

logger = AppLogger.get_logger(__name__)

SIGNAL_FILE = "signal.csv"
MANIFEST_FILE = "manifest.json"
INDEX_FILE = "index.json"
SIGNAL_COLUMNS = ("time_s", "accel_x_ms2", "accel_y_ms2", "accel_z_ms2", "shaft_angle_rad")
ACCEL_COLUMNS = {"x_c": "accel_x_ms2", "y_c": "accel_y_ms2", "z_c": "accel_z_ms2"}

# stream ids under the run seed
NOISE_STREAM = 1
PERTURBATION_STREAM = 2


@dataclass(frozen=True, eq=False)
class SimulationRun:
    config: RunConfig
    errors: ProfileErrorField
    gms: GmsCurve
    result: SimulationResult
    signal: pd.DataFrame
    manifest: Dict[str, Any]


def run_seed_stream(seed: int, stream: int) -> np.random.Generator:
    return np.random.default_rng([seed, stream])


def initial_perturbation(config: RunConfig, size: int) -> Optional[np.ndarray]:
    if config.initial_condition_scale == 0:
        return None
    return run_seed_stream(config.seed, PERTURBATION_STREAM).standard_normal(size) * config.initial_condition_scale


def measured_channels(config: RunConfig, result: SimulationResult) -> Dict[str, np.ndarray]:
    """Accelerometer channels with the seeded measurement noise added."""
    channels = {dof: result.accelerations[dof].copy() for dof in ACCEL_COLUMNS}
    if config.measurement_noise_std > 0:
        rng = run_seed_stream(config.seed, NOISE_STREAM)
        noise = rng.standard_normal((len(ACCEL_COLUMNS), result.n_samples)) * config.measurement_noise_std
        for k, dof in enumerate(ACCEL_COLUMNS):
            channels[dof] += noise[k]
    return channels


def build_manifest(config: RunConfig, errors: ProfileErrorField, gms: GmsCurve,
                   result: SimulationResult) -> Dict[str, Any]:
    pair = config.pair
    conditions = config.conditions
    return {
        "schema_version": CONFIG_SCHEMA_VERSION,
        "config": config.model_dump(mode="json"),
        "seed": config.seed,
        "profile_error_seed": config.error_seed,
        "profile_error_hash": errors.digest(),
        "profile_error_max_um": errors.max_abs_um,
        "health_state": config.fault.label,
        "accelerometer_dof": config.accelerometer_dof,
        "signal_columns": list(SIGNAL_COLUMNS),
        "n_samples": result.n_samples,
        "sampling_rate_hz": conditions.sampling_rate_hz,
        "tach_shaft": "input",
        "tach_pulses": [int(i) for i in result.tach_pulses],
        "solver_stats": result.metadata,
        "gms": {
            "mean_n_per_m": gms.mean_stiffness,
            "min_n_per_m": float(gms.stiffness.min()),
            "max_n_per_m": float(gms.stiffness.max()),
            "mean_error_load_n": gms.mean_error_load,
            "n_mesh_cycles": gms.n_mesh_cycles,
            "points_per_cycle": gms.points_per_cycle,
        },
        "speeds": {
            "input_hz": conditions.input_speed_hz,
            "output_hz": conditions.output_speed_hz(pair),
            "mesh_hz": conditions.mesh_frequency(pair.pinion.tooth_count),
        },
        "tooth_counts": {"pinion": pair.pinion.tooth_count, "gear": pair.gear.tooth_count},
    }


class SimulationService:
    def __init__(self, storage: StorageService):
        self.storage = storage

    def run(self, config: RunConfig) -> SimulationRun:
        """Profile errors, mesh stiffness, assembly and time march for one configuration."""
        started = time.perf_counter()
        pair = config.pair
        logger.info(
            f"Simulating {config.name or 'run'}: {pair.pinion.tooth_count}/{pair.gear.tooth_count} teeth, "
            f"{config.fault.label}, seed {config.seed}, profile-error seed {config.error_seed}"
        )
        try:
            errors = generate_profile_errors(pair, config.din_grade, config.error_seed,
                                             n_points=config.stiffness.n_flank_points)
            gms = gms_over_cycle(
                pair, errors, config.fault,
                n_cyc=config.stiffness.n_cyc,
                n_points=config.stiffness.n_points,
                fillet_radius_coeff=config.stiffness.fillet_radius_coeff,
            )
            model = build_dynamic_model(config, gms, LAYOUT)
            result = integrate(model, config.solver, initial_perturbation(config, LAYOUT.size))
        except GearSimError:
            logger.error(f"Simulation of {config.name or 'run'} failed", exc_info=True)
            raise

        channels = measured_channels(config, result)
        signal = pd.DataFrame({
            "time_s": result.time,
            **{ACCEL_COLUMNS[dof]: channels[dof] for dof in ACCEL_COLUMNS},
            "shaft_angle_rad": result.shaft_angles["pinion"],
        })
        manifest = build_manifest(config, errors, gms, result)
        logger.info(f"Simulation finished: {result.n_samples} samples, {result.tach_pulses.size} tach pulses "
                    f"({time.perf_counter() - started:.2f}s)")
        return SimulationRun(config=config, errors=errors, gms=gms, result=result, signal=signal, manifest=manifest)

    def write(self, run: SimulationRun, relative: str = ".") -> Path:
        # a directory with a manifest always holds a complete run
        signal_path, manifest_path = Path(relative) / SIGNAL_FILE, Path(relative) / MANIFEST_FILE
        self.storage.remove(manifest_path)
        self.storage.write_csv(signal_path, run.signal)
        try:
            self.storage.write_json(manifest_path, run.manifest)
        except Exception:
            logger.error(f"Manifest write failed, removing {self.storage.path(signal_path)}")
            self.storage.remove(signal_path)
            raise
        return self.storage.path(relative)

    def simulate(self, config: RunConfig, relative: str = ".") -> SimulationRun:
        run = self.run(config)
        self.write(run, relative)
        return run

    def _load_index(self) -> Dict[str, Any]:
        if self.storage.exists(INDEX_FILE):
            return self.storage.read_json(INDEX_FILE)
        return {}

    def batch(self, config: RunConfig, n_signals: int, workers: int = 1, base_seed: Optional[int] = None,
              progress: bool = False) -> Dict[str, Any]:
        """n runs sharing one profile-error field; noise and IC seeds are base_seed + i.

        Completed runs recorded in index.json are skipped on a rerun. Failures are
        recorded in the index and do not stop the batch.
        """
        if n_signals < 1:
            raise ConfigError("batch needs at least one signal")
        base = config.seed if base_seed is None else base_seed
        error_seed = config.error_seed
        configs = {
            f"run_{i:04d}": config.model_copy(update={"seed": base + i, "profile_error_seed": error_seed})
            for i in range(n_signals)
        }

        previous = {entry["run"]: entry for entry in self._load_index().get("runs", [])}
        entries: Dict[str, Dict[str, Any]] = {}
        pending: List[str] = []
        for name, cfg in configs.items():
            done = previous.get(name)
            if done and done.get("status") == "ok" and done.get("seed") == cfg.seed \
                    and self.storage.exists(name, MANIFEST_FILE):
                entries[name] = done
            else:
                pending.append(name)
        if len(pending) < n_signals:
            logger.info(f"Resuming batch: {n_signals - len(pending)} runs already complete")

        def record(name: str, entry: Dict[str, Any]) -> None:
            entries[name] = entry
            self.storage.write_json(INDEX_FILE, self._index_payload(config, n_signals, base, error_seed, entries))

        record_root = str(self.storage.root)
        bar = tqdm(total=len(pending), desc="batch", unit="run", disable=not progress)
        try:
            if workers <= 1:
                for name in pending:
                    record(name, _run_into(record_root, name, configs[name]))
                    bar.update(1)
            else:
                with ProcessPoolExecutor(max_workers=workers) as pool:
                    futures = {name: pool.submit(_run_into, record_root, name, configs[name]) for name in pending}
                    for name, future in futures.items():
                        record(name, future.result())
                        bar.update(1)
        finally:
            bar.close()

        index = self._index_payload(config, n_signals, base, error_seed, entries)
        self.storage.write_json(INDEX_FILE, index)
        failed = [e["run"] for e in index["runs"] if e["status"] != "ok"]
        if failed:
            logger.warning(f"Batch finished with {len(failed)} failed runs: {', '.join(failed)}")
        else:
            logger.info(f"Batch of {n_signals} runs complete")
        return index

    @staticmethod
    def _index_payload(config: RunConfig, n_signals: int, base_seed: int, error_seed: int,
                       entries: Dict[str, Dict[str, Any]]) -> Dict[str, Any]:
        return {
            "schema_version": CONFIG_SCHEMA_VERSION,
            "config": config.model_dump(mode="json"),
            "n_signals": n_signals,
            "base_seed": base_seed,
            "profile_error_seed": error_seed,
            "runs": [entries[name] for name in sorted(entries)],
        }


def _run_into(root: str, name: str, config: RunConfig) -> Dict[str, Any]:
    """One batch member; top level so the process pool can pickle it."""
    service = SimulationService(StorageService(root))
    try:
        run = service.simulate(config, name)
    except GearSimError as e:
        logger.error(f"Batch member {name} failed: {e}")
        return {"run": name, "seed": config.seed, "status": "failed", "error": f"{type(e).__name__}: {e}"}
    return {
        "run": name,
        "seed": config.seed,
        "status": "ok",
        "health_state": run.manifest["health_state"],
        "profile_error_hash": run.manifest["profile_error_hash"],
    }
