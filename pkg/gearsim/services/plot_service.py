# gearsim/services/plot_service.py
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
import pandas as pd

from gearsim.errors import GearSimError
from gearsim.schemas.geometry import ProfileErrorField, WheelGeometry
from gearsim.schemas.run_config import RunConfig
from gearsim.schemas.stiffness import GmsCurve
from gearsim.services.feature_service import FeatureSettings, simulation_record
from gearsim.services.geometry_service import build_wheel_geometries, generate_profile_errors
from gearsim.services.logger import AppLogger
from gearsim.services.sigproc_service import process_record
from gearsim.services.stiffness_service import gms_over_cycle
from gearsim.services.storage_service import StorageService

logger = AppLogger.get_logger(__name__)

PROFILES_FILE = "profiles.csv"
GMS_FILE = "mesh_stiffness.csv"
SHAFTS = ("input", "output")


def profile_frame(wheels: Dict[str, WheelGeometry]) -> pd.DataFrame:
    """Healthy and faulted tooth sections of both wheels, long format."""
    parts = []
    for name, wheel in wheels.items():
        variants = [("healthy", -1, wheel.healthy_profile)]
        variants += [("faulted", i, wheel.teeth[i].profile) for i in wheel.faulted_teeth]
        for variant, tooth, profile in variants:
            parts.append(pd.DataFrame({
                "wheel": name,
                "variant": variant,
                "tooth": tooth,
                "x_m": profile.x_coords,
                "half_thickness_m": profile.half_thickness,
                "flank_radius_m": profile.flank_radius,
            }))
    return pd.concat(parts, ignore_index=True)


def profile_error_frame(errors: ProfileErrorField, wheel: str) -> pd.DataFrame:
    matrix = errors.for_wheel(wheel)
    n_points = matrix.shape[1]
    frame = pd.DataFrame(matrix, columns=[f"roll_{j}" for j in range(n_points)])
    frame.insert(0, "tooth", np.arange(matrix.shape[0]))
    return frame


def gms_frame(gms: GmsCurve) -> pd.DataFrame:
    out = {
        "cycle_position": gms.cycle_position,
        "pinion_angle_rad": gms.cycle_grid,
        "stiffness_n_per_m": gms.stiffness,
    }
    for k in range(gms.pair_stiffness.shape[1]):
        out[f"pair_{k}_n_per_m"] = gms.pair_stiffness[:, k]
        out[f"pair_{k}_pinion_tooth"] = gms.pinion_teeth[:, k]
        out[f"pair_{k}_gear_tooth"] = gms.gear_teeth[:, k]
    out["static_transmission_error_m"] = gms.static_transmission_error
    return pd.DataFrame(out)


def sync_average_frame(storage: StorageService, run_dir: Path, settings: FeatureSettings) -> pd.DataFrame:
    record = simulation_record(storage, run_dir, settings)
    avg, diff = process_record(record.signal, record.mesh_order, settings.points_per_rev, record.shaft_ratio,
                               settings.harmonics, settings.sidebands)
    p = settings.points_per_rev
    return pd.DataFrame({
        "angle_rad": 2 * np.pi * np.arange(p) / p,
        "sync_average_ms2": avg.cycle_signal,
        "difference_signal_ms2": diff.signal,
    })


class PlotDataService:
    def __init__(self, storage: StorageService):
        self.storage = storage

    def export(self, config: RunConfig, run_dir: Optional[Path] = None, points_per_rev: int = 1024) -> List[str]:
        """Profiles, profile errors and mesh stiffness for a config; sync averages when a run is given."""
        pair = config.pair
        written = []
        try:
            errors = generate_profile_errors(pair, config.din_grade, config.error_seed,
                                             n_points=config.stiffness.n_flank_points)
            wheels = build_wheel_geometries(pair, errors, config.fault, config.stiffness.n_points,
                                            config.stiffness.fillet_radius_coeff)
            gms = gms_over_cycle(pair, errors, config.fault, n_cyc=config.stiffness.n_cyc,
                                 n_points=config.stiffness.n_points,
                                 fillet_radius_coeff=config.stiffness.fillet_radius_coeff)
        except GearSimError:
            logger.error("Plot data could not be computed", exc_info=True)
            raise

        self.storage.write_csv(PROFILES_FILE, profile_frame(wheels))
        written.append(PROFILES_FILE)
        for wheel in ("pinion", "gear"):
            name = f"profile_errors_{wheel}.csv"
            self.storage.write_csv(name, profile_error_frame(errors, wheel))
            written.append(name)
        self.storage.write_csv(GMS_FILE, gms_frame(gms))
        written.append(GMS_FILE)

        if run_dir is not None:
            run_dir = Path(run_dir).absolute()
            for shaft in SHAFTS:
                name = f"sync_average_{shaft}.csv"
                settings = FeatureSettings(shaft=shaft, points_per_rev=points_per_rev)
                self.storage.write_csv(name, sync_average_frame(self.storage, run_dir, settings))
                written.append(name)
        logger.info(f"Wrote plot data: {', '.join(written)}")
        return written
