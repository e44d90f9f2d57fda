# gearsim/schemas/fault.py
from typing import Annotated, List, Literal, Sequence, Union

from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, field_validator

Wheel = Literal["pinion", "gear"]


def _site(wheel: str, teeth: Sequence[int]) -> str:
    return f"{wheel}{'-'.join(str(i) for i in teeth)}"


class _FaultBase(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    def named_teeth(self, wheel: str) -> List[int]:
        """Teeth the description points at on `wheel`, whatever the severity."""
        return []

    def tooth_indices_for(self, wheel: str) -> List[int]:
        return []

    @property
    def label(self) -> str:
        return "healthy"


class Healthy(_FaultBase):
    kind: Literal["healthy"] = "healthy"


class ToothBreakage(_FaultBase):
    kind: Literal["tooth_breakage"] = "tooth_breakage"
    tip_loss_fraction: float = Field(ge=0.0, le=1.0)
    tooth_index: int = Field(default=0, ge=0)
    wheel: Wheel = "gear"

    def named_teeth(self, wheel: str) -> List[int]:
        return [self.tooth_index] if wheel == self.wheel else []

    def tooth_indices_for(self, wheel: str) -> List[int]:
        return self.named_teeth(wheel) if self.tip_loss_fraction > 0.0 else []

    @property
    def label(self) -> str:
        if self.tip_loss_fraction == 0.0:
            return "healthy"
        return f"tooth_breakage_{self.tip_loss_fraction:g}_{_site(self.wheel, [self.tooth_index])}"


class Pitting(_FaultBase):
    kind: Literal["pitting"] = "pitting"
    pit_depth_mm: float = Field(gt=0)
    flank_position: float = Field(default=0.5, ge=0.0, le=1.0)
    axial_extent_fraction: float = Field(gt=0.0, le=1.0)
    radial_extent_fraction: float = Field(default=0.1, gt=0.0, le=1.0)
    tooth_indices: List[int] = Field(min_length=1)
    wheel: Wheel = "gear"

    @field_validator("tooth_indices")
    @classmethod
    def unique_non_negative(cls, v):
        if any(i < 0 for i in v):
            raise ValueError("tooth indices must be non-negative")
        return sorted(set(v))

    def named_teeth(self, wheel: str) -> List[int]:
        return list(self.tooth_indices) if wheel == self.wheel else []

    def tooth_indices_for(self, wheel: str) -> List[int]:
        return self.named_teeth(wheel)

    @property
    def label(self) -> str:
        return (
            f"pitting_d{self.pit_depth_mm:g}_a{self.axial_extent_fraction:g}"
            f"_p{self.flank_position:g}_r{self.radial_extent_fraction:g}_{_site(self.wheel, self.tooth_indices)}"
        )


class InvoluteDestruction(_FaultBase):
    kind: Literal["involute_destruction"] = "involute_destruction"
    deviation_amplitude_um: float = Field(ge=0)
    tooth_indices: List[int] = Field(min_length=1)
    wheel: Wheel = "gear"

    @field_validator("tooth_indices")
    @classmethod
    def unique_non_negative(cls, v):
        if any(i < 0 for i in v):
            raise ValueError("tooth indices must be non-negative")
        return sorted(set(v))

    def named_teeth(self, wheel: str) -> List[int]:
        return list(self.tooth_indices) if wheel == self.wheel else []

    def tooth_indices_for(self, wheel: str) -> List[int]:
        return self.named_teeth(wheel) if self.deviation_amplitude_um > 0.0 else []

    @property
    def label(self) -> str:
        if self.deviation_amplitude_um == 0.0:
            return "healthy"
        return f"involute_destruction_{self.deviation_amplitude_um:g}_{_site(self.wheel, self.tooth_indices)}"


FaultSpec = Annotated[
    Union[Healthy, ToothBreakage, Pitting, InvoluteDestruction],
    Field(discriminator="kind"),
]

fault_adapter = TypeAdapter(FaultSpec)
