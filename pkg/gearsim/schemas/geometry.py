# gearsim/schemas/geometry.py
import hashlib
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from gearsim.schemas.gear import GearWheelSpec


@dataclass(frozen=True, eq=False)
class ToothProfile:
    """Sectioned tooth of one wheel, root (X = 0) to tip.

    x_coords runs along the tooth centre line from the root junction, half_thickness
    is Y(X) and width the effective face width at each section, so that
    area = 2 Y W and second_moment = (2 Y)^3 W / 12 pointwise.
    """

    wheel: str
    spec: GearWheelSpec
    x_coords: np.ndarray
    half_thickness: np.ndarray
    width: np.ndarray
    area: np.ndarray
    second_moment: np.ndarray
    flank_radius: np.ndarray
    root_offset: float
    root_half_angle: float
    involute_start_radius: float
    tip_radius: float
    # untruncated tooth this one was cut from; sections below the cut are shared
    parent: Optional["ToothProfile"] = None

    @property
    def n_points(self) -> int:
        return int(self.x_coords.size)

    @classmethod
    def from_sections(cls, wheel, spec, x_coords, half_thickness, width, flank_radius, **geometry):
        x = np.asarray(x_coords, dtype=float)
        y = np.asarray(half_thickness, dtype=float)
        w = np.broadcast_to(np.asarray(width, dtype=float), x.shape).copy()
        return cls(
            wheel=wheel,
            spec=spec,
            x_coords=x,
            half_thickness=y,
            width=w,
            area=2.0 * y * w,
            second_moment=(2.0 * y) ** 3 * w / 12.0,
            flank_radius=np.asarray(flank_radius, dtype=float),
            **geometry,
        )


@dataclass(frozen=True)
class ContactProperties:
    contact_ratio: float
    initial_contact_point: float  # distance from the pinion base tangent point along the line of action, m
    mesh_period_rad: float
    base_pitch: float
    line_of_action_length: float  # T1T2
    path_of_contact: float
    center_distance: float

    @property
    def final_contact_point(self) -> float:
        return self.initial_contact_point + self.path_of_contact


@dataclass(frozen=True, eq=False)
class ProfileErrorField:
    pinion: np.ndarray  # [tooth, flank point], um, root -> tip of the active flank
    gear: np.ndarray
    din_grade: int
    seed: int
    tolerance_um: Dict[str, float] = field(default_factory=dict)

    def for_wheel(self, wheel: str) -> np.ndarray:
        return self.pinion if wheel == "pinion" else self.gear

    @property
    def max_abs_um(self) -> Dict[str, float]:
        return {
            "pinion": float(np.max(np.abs(self.pinion))) if self.pinion.size else 0.0,
            "gear": float(np.max(np.abs(self.gear))) if self.gear.size else 0.0,
        }

    @property
    def is_zero(self) -> bool:
        return not (np.any(self.pinion) or np.any(self.gear))

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(f"{self.din_grade}:{self.seed}:".encode())
        for arr in (self.pinion, self.gear):
            h.update(str(arr.shape).encode())
            h.update(np.ascontiguousarray(arr, dtype="<f8").tobytes())
        return h.hexdigest()


@dataclass(frozen=True, eq=False)
class PitBand:
    inner_radius: float
    outer_radius: float
    contact_width_factor: float


@dataclass(frozen=True, eq=False)
class ToothGeometry:
    profile: ToothProfile
    deviation_um: np.ndarray
    tip_limit_radius: float
    pit: Optional[PitBand] = None


@dataclass(frozen=True, eq=False)
class WheelGeometry:
    wheel: str
    spec: GearWheelSpec
    healthy_profile: ToothProfile
    teeth: Tuple[ToothGeometry, ...]
    faulted_teeth: Tuple[int, ...] = ()

    @property
    def tooth_count(self) -> int:
        return len(self.teeth)
