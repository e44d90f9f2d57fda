# gearsim/schemas/stiffness.py
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class LoadDecomposition:
    """Unit mesh force split at the contact into tooth-axis and tooth-normal parts."""

    axial_force: float
    shear_force: float
    application_point_index: int


@dataclass(frozen=True, eq=False)
class StrainEnergyBreakdown:
    bending: np.ndarray
    axial: np.ndarray
    shear: np.ndarray
    hertz_compliance: float
    foundation_compliance: float


@dataclass(frozen=True)
class ContactState:
    pinion_radius: float
    gear_radius: float
    pinion_tip_limit: float = np.inf
    gear_tip_limit: float = np.inf
    contact_width_factor: float = 1.0


@dataclass(frozen=True, eq=False)
class GmsCurve:
    """Mesh stiffness over n_mesh_cycles consecutive mesh cycles.

    cycle_grid is the pinion rotation angle (rad) of each sample. Per-pair arrays use
    nan (stiffness) and -1 (tooth index) where the pair is out of contact.
    """

    cycle_grid: np.ndarray
    stiffness: np.ndarray
    pair_stiffness: np.ndarray
    pinion_teeth: np.ndarray
    gear_teeth: np.ndarray
    static_transmission_error: np.ndarray
    points_per_cycle: int
    n_mesh_cycles: int
    mesh_period_rad: float

    @property
    def cycle_position(self) -> np.ndarray:
        """Sample positions in mesh cycles."""
        return self.cycle_grid / self.mesh_period_rad

    def mesh_cycle_mean(self) -> np.ndarray:
        return self.stiffness.reshape(self.n_mesh_cycles, self.points_per_cycle).mean(axis=0)

    @property
    def mean_stiffness(self) -> float:
        return float(np.mean(self.stiffness))

    @property
    def mean_error_load(self) -> float:
        """Cycle mean of gms * ste, in N."""
        return float(np.mean(self.stiffness * self.static_transmission_error))
