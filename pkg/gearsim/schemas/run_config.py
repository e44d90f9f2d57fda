# gearsim/schemas/run_config.py
from typing import Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from gearsim.schemas.fault import FaultSpec, Healthy
from gearsim.schemas.gear import GearPairSpec, GearWheelSpec, OperatingConditions

CONFIG_SCHEMA_VERSION = 1
ANTI_ALIASING_FACTOR = 20.0


class SolverSettings(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    newmark_beta: float = Field(default=0.25, gt=0)
    newmark_gamma: float = Field(default=0.5, ge=0.5)
    dt: Optional[float] = Field(default=None, gt=0, description="defaults to 1 / sampling rate")
    nr_rel_tol: float = Field(default=1e-8, gt=0)
    nr_max_iter: int = Field(default=20, ge=1)
    initial_displacement: Optional[List[float]] = None
    initial_velocity: Optional[List[float]] = None
    start_from_equilibrium: bool = True
    transient_revolutions: float = Field(default=1.0, ge=0, description="output-shaft revolutions discarded")

    @model_validator(mode="after")
    def check_stability(self):
        if 2 * self.newmark_beta < self.newmark_gamma:
            raise ValueError(
                f"Newmark parameters need 2*beta >= gamma >= 0.5, got beta={self.newmark_beta}, "
                f"gamma={self.newmark_gamma}"
            )
        return self


class StructuralParameters(BaseModel):
    """Bearing, shaft, casing and damping constants. Non-authoritative defaults."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    bearing_radial_stiffness: float = Field(default=1.0e8, gt=0, description="N/m")
    bearing_axial_stiffness: float = Field(default=1.0e8, gt=0, description="N/m")
    casing_mount_stiffness: float = Field(default=5.0e6, gt=0, description="N/m")
    casing_mass: float = Field(default=8.0, gt=0, description="kg")
    pinion_shaft_torsional_stiffness: float = Field(default=5.0e3, gt=0, description="N m/rad")
    gear_shaft_torsional_stiffness: float = Field(default=1.0e4, gt=0, description="N m/rad")
    pinion_shaft_length: float = Field(default=0.15, gt=0, description="m")
    gear_shaft_length: float = Field(default=0.15, gt=0, description="m")
    motor_inertia: float = Field(default=5.0e-3, gt=0, description="kg m^2")
    load_inertia: float = Field(default=1.0e-2, gt=0, description="kg m^2")
    pinion_mass: Optional[float] = Field(default=None, gt=0)
    pinion_inertia: Optional[float] = Field(default=None, gt=0)
    gear_mass: Optional[float] = Field(default=None, gt=0)
    gear_inertia: Optional[float] = Field(default=None, gt=0)
    rayleigh_a: float = Field(default=5.0, ge=0, description="1/s")
    rayleigh_b: float = Field(default=1e-6, ge=0, description="s")


class StiffnessSettings(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    n_points: int = Field(default=1000, ge=50, description="tooth profile grid")
    n_cyc: int = Field(default=512, ge=64, description="points per mesh cycle")
    fillet_radius_coeff: float = Field(default=0.38, gt=0, description="fillet radius / module")
    n_flank_points: int = Field(default=64, ge=8, description="profile-error samples per flank")


class RunConfig(BaseModel):
    model_config = ConfigDict(
        extra="forbid",
        frozen=True,
        json_schema_extra={
            "example": {
                "schema_version": 1,
                "pinion": {"tooth_count": 17, "module_mm": 3.0, "face_width_mm": 20.0, "hub_bore_radius_mm": 10.0},
                "gear": {"tooth_count": 38, "module_mm": 3.0, "face_width_mm": 20.0, "hub_bore_radius_mm": 15.0},
                "conditions": {"input_speed_hz": 40, "output_load_nm": 10, "sampling_rate_hz": 25000, "duration_s": 1.0},
                "din_grade": 7,
                "fault": {"kind": "tooth_breakage", "tip_loss_fraction": 0.25, "tooth_index": 3},
                "seed": 7,
            }
        },
    )

    schema_version: int = CONFIG_SCHEMA_VERSION
    name: Optional[str] = None
    pinion: GearWheelSpec
    gear: GearWheelSpec
    conditions: OperatingConditions
    din_grade: int = Field(default=7, ge=5, le=9)
    fault: FaultSpec = Field(default_factory=Healthy)
    solver: SolverSettings = Field(default_factory=SolverSettings)
    structure: StructuralParameters = Field(default_factory=StructuralParameters)
    stiffness: StiffnessSettings = Field(default_factory=StiffnessSettings)
    seed: int = Field(default=0, ge=0)
    profile_error_seed: Optional[int] = Field(default=None, ge=0)
    measurement_noise_std: float = Field(default=0.0, ge=0, description="m/s^2")
    initial_condition_scale: float = Field(default=0.0, ge=0, description="m or rad")
    accelerometer_dof: str = "y_c"
    output_dir: Optional[str] = None

    @model_validator(mode="after")
    def check_consistency(self):
        if self.schema_version != CONFIG_SCHEMA_VERSION:
            raise ValueError(f"unsupported schema_version {self.schema_version}")
        if abs(self.pinion.module_mm - self.gear.module_mm) > 1e-12:
            raise ValueError("pinion and gear modules differ")
        if abs(self.pinion.pressure_angle_deg - self.gear.pressure_angle_deg) > 1e-12:
            raise ValueError("pinion and gear pressure angles differ")
        f_mesh = self.conditions.mesh_frequency(self.pinion.tooth_count)
        if self.conditions.sampling_rate_hz < ANTI_ALIASING_FACTOR * f_mesh:
            raise ValueError(
                f"sampling rate {self.conditions.sampling_rate_hz:g} Hz is below "
                f"{ANTI_ALIASING_FACTOR:g} x mesh frequency ({f_mesh:g} Hz)"
            )
        for wheel in ("pinion", "gear"):
            teeth = getattr(self, wheel).tooth_count
            bad = [i for i in self.fault.named_teeth(wheel) if i >= teeth]
            if bad:
                raise ValueError(f"fault tooth indices {bad} out of range for {wheel} with {teeth} teeth")
        if self.accelerometer_dof not in ("x_c", "y_c", "z_c"):
            raise ValueError("accelerometer_dof must be one of x_c, y_c, z_c")
        return self

    @property
    def pair(self) -> GearPairSpec:
        return GearPairSpec(pinion=self.pinion, gear=self.gear)

    @property
    def error_seed(self) -> int:
        return self.seed if self.profile_error_seed is None else self.profile_error_seed


class Preset(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    name: str
    description: str
    cases: int = Field(ge=1)
    records: int = Field(ge=1)
    config: RunConfig
    notes: Dict[str, str] = Field(default_factory=dict)
