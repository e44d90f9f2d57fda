# gearsim/schemas/gear.py
import math

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class MaterialSpec(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    young_modulus: float = Field(default=2.068e11, gt=0, description="Pa")
    poisson_ratio: float = Field(default=0.3, gt=0, lt=0.5)
    density: float = Field(default=7850.0, gt=0, description="kg/m^3")

    @property
    def shear_modulus(self) -> float:
        return self.young_modulus / (2 * (1 + self.poisson_ratio))


class GearWheelSpec(BaseModel):
    model_config = ConfigDict(
        extra="forbid",
        frozen=True,
        json_schema_extra={
            "example": {
                "tooth_count": 17,
                "module_mm": 3.0,
                "pressure_angle_deg": 20.0,
                "face_width_mm": 20.0,
                "hub_bore_radius_mm": 10.0,
            }
        },
    )

    tooth_count: int = Field(ge=6)
    module_mm: float = Field(gt=0)
    pressure_angle_deg: float = Field(default=20.0, gt=0, lt=90)
    face_width_mm: float = Field(gt=0)
    addendum_coeff: float = Field(default=1.0, gt=0)
    dedendum_coeff: float = Field(default=1.25, gt=0)
    material: MaterialSpec = Field(default_factory=MaterialSpec)
    hub_bore_radius_mm: float = Field(gt=0)

    @model_validator(mode="after")
    def check_hub_inside_root(self):
        if self.hub_bore_radius_mm >= self.root_radius * 1e3:
            raise ValueError(
                f"hub bore radius {self.hub_bore_radius_mm} mm reaches the root circle "
                f"({self.root_radius * 1e3:.3f} mm)"
            )
        return self

    # Derived radii in metres
    @property
    def module(self) -> float:
        return self.module_mm * 1e-3

    @property
    def pressure_angle(self) -> float:
        return math.radians(self.pressure_angle_deg)

    @property
    def face_width(self) -> float:
        return self.face_width_mm * 1e-3

    @property
    def hub_bore_radius(self) -> float:
        return self.hub_bore_radius_mm * 1e-3

    @property
    def pitch_radius(self) -> float:
        return self.module * self.tooth_count / 2

    @property
    def base_radius(self) -> float:
        return self.pitch_radius * math.cos(self.pressure_angle)

    @property
    def addendum_radius(self) -> float:
        return self.pitch_radius + self.addendum_coeff * self.module

    @property
    def root_radius(self) -> float:
        return self.pitch_radius - self.dedendum_coeff * self.module


class GearPairSpec(BaseModel):
    """Pinion drives, gear is the output wheel."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    pinion: GearWheelSpec
    gear: GearWheelSpec

    @property
    def ratio(self) -> float:
        return self.gear.tooth_count / self.pinion.tooth_count

    @property
    def center_distance(self) -> float:
        return self.pinion.pitch_radius + self.gear.pitch_radius

    def wheel(self, name: str) -> GearWheelSpec:
        if name not in ("pinion", "gear"):
            raise ValueError(f"unknown wheel '{name}'")
        return getattr(self, name)


class OperatingConditions(BaseModel):
    model_config = ConfigDict(
        extra="forbid",
        frozen=True,
        json_schema_extra={
            "example": {
                "input_speed_hz": 40.0,
                "output_load_nm": 10.0,
                "sampling_rate_hz": 25000.0,
                "duration_s": 60.0,
            }
        },
    )

    input_speed_hz: float = Field(gt=0)
    output_load_nm: float = Field(gt=0)
    sampling_rate_hz: float = Field(gt=0)
    duration_s: float = Field(gt=0)
    gravity_ms2: float = Field(default=9.81, ge=0)

    @field_validator("input_speed_hz", "output_load_nm", "sampling_rate_hz", "duration_s", mode="before")
    @classmethod
    def reject_non_finite(cls, v):
        if isinstance(v, (int, float)) and not math.isfinite(v):
            raise ValueError("must be finite")
        return v

    def mesh_frequency(self, pinion_teeth: int) -> float:
        return self.input_speed_hz * pinion_teeth

    def output_speed_hz(self, pair: GearPairSpec) -> float:
        return self.input_speed_hz / pair.ratio
