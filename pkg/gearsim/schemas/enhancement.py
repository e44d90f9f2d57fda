# gearsim/schemas/enhancement.py
from dataclasses import dataclass
from typing import Dict, List, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, field_validator

from gearsim.errors import ConfigError
from gearsim.schemas.signal import DEFAULT_ERROR_CIS, LOG_CI_NAMES

HEALTHY_LABEL = "healthy"
PARAM_COLUMNS: Tuple[str, ...] = ("width_ratio", "fault_to_harmonics", "noise_level")


class EnhancementParams(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    width_ratio: float = Field(gt=0)
    fault_to_harmonics: float = Field(ge=0, description="may exceed 1")
    noise_level: float = Field(ge=0, description="white-noise multiplier on the normalized scale")

    def as_tuple(self) -> Tuple[float, float, float]:
        return self.width_ratio, self.fault_to_harmonics, self.noise_level


def _steps(start: float, stop: float, step: float) -> List[float]:
    n = int(round((stop - start) / step))
    return [round(start + i * step, 10) for i in range(n + 1)]


class GridSpec(BaseModel):
    model_config = ConfigDict(
        extra="forbid",
        frozen=True,
        json_schema_extra={
            "example": {
                "width_ratios": [0.5, 1.0],
                "fault_to_harmonics": [0.0, 1.0, 2.0],
                "noise_levels": [0.0, 0.5],
                "n_noise": 5,
                "seed": 0,
            }
        },
    )

    width_ratios: List[float] = Field(min_length=1)
    fault_to_harmonics: List[float] = Field(min_length=1)
    noise_levels: List[float] = Field(min_length=1)
    n_noise: int = Field(default=5, ge=1, description="noise realizations per simulated signal")
    seed: int = Field(default=0, ge=0)
    cis: List[str] = Field(default_factory=lambda: list(DEFAULT_ERROR_CIS), min_length=1)
    healthy_label: str = HEALTHY_LABEL

    @field_validator("width_ratios")
    @classmethod
    def positive_ratios(cls, v):
        if any(r <= 0 for r in v):
            raise ValueError("width ratios must be positive")
        return v

    @field_validator("fault_to_harmonics", "noise_levels")
    @classmethod
    def non_negative(cls, v):
        if any(x < 0 for x in v):
            raise ValueError("values must be non-negative")
        return v

    @field_validator("cis")
    @classmethod
    def known_cis(cls, v):
        unknown = [c for c in v if c not in LOG_CI_NAMES]
        if unknown:
            raise ValueError(f"unknown condition indicators {unknown}; choose from {list(LOG_CI_NAMES)}")
        return v

    @classmethod
    def default(cls, **overrides) -> "GridSpec":
        values = {
            "width_ratios": _steps(0.1, 1.0, 0.05) + [1.25, 1.5, 2.0],
            "fault_to_harmonics": _steps(0.0, 3.0, 0.05),
            "noise_levels": _steps(0.0, 2.5, 0.05),
        }
        values.update(overrides)
        return cls(**values)

    @property
    def shape(self) -> Tuple[int, int, int]:
        return len(self.width_ratios), len(self.fault_to_harmonics), len(self.noise_levels)

    @property
    def size(self) -> int:
        a, b, c = self.shape
        return a * b * c

    def combination(self, index: int) -> EnhancementParams:
        """C-order: width ratio slowest, noise level fastest."""
        i, j, k = np.unravel_index(index, self.shape)
        return EnhancementParams(
            width_ratio=self.width_ratios[i],
            fault_to_harmonics=self.fault_to_harmonics[j],
            noise_level=self.noise_levels[k],
        )


@dataclass(frozen=True, eq=False)
class SignalDataset:
    """Difference signals of one source (simulated or measured), one row per record."""

    labels: Tuple[str, ...]
    signals: np.ndarray
    names: Tuple[str, ...] = ()

    def __post_init__(self):
        sig = np.atleast_2d(np.asarray(self.signals, dtype=float))
        object.__setattr__(self, "signals", sig)
        if sig.shape[0] != len(self.labels):
            raise ConfigError(f"{sig.shape[0]} signals but {len(self.labels)} labels")
        if not self.names:
            object.__setattr__(self, "names", tuple(f"signal_{i:04d}" for i in range(sig.shape[0])))

    @property
    def points_per_rev(self) -> int:
        return int(self.signals.shape[1])

    @property
    def groups(self) -> Tuple[str, ...]:
        return tuple(dict.fromkeys(self.labels))

    def mask(self, label: str) -> np.ndarray:
        return np.array([lab == label for lab in self.labels])

    def require_label(self, label: str, source: str) -> None:
        if not self.mask(label).any():
            raise ConfigError(f"{source} dataset has no '{label}' signals; a healthy subset is required")


@dataclass(frozen=True, eq=False)
class ErrorTable:
    """Normalized CI errors for every grid combination.

    errors[c, g, j] is |mean sim CI - mean exp CI| / sigma_exp for combination c,
    health-state group g and indicator j.
    """

    combinations: pd.DataFrame
    errors: np.ndarray
    groups: Tuple[str, ...]
    cis: Tuple[str, ...]
    breakdown: pd.DataFrame

    @property
    def scores(self) -> np.ndarray:
        return self.errors.mean(axis=2).mean(axis=1)

    @property
    def best_index(self) -> int:
        return int(np.argmin(self.scores))

    @property
    def best_score(self) -> float:
        return float(self.scores[self.best_index])

    @property
    def best_params(self) -> EnhancementParams:
        row = self.combinations.iloc[self.best_index]
        return EnhancementParams(**{c: float(row[c]) for c in PARAM_COLUMNS})

    def to_frame(self) -> pd.DataFrame:
        frame = self.combinations.copy()
        frame["score"] = self.scores
        for g, group in enumerate(self.groups):
            for j, ci in enumerate(self.cis):
                frame[f"err_{group}_{ci}"] = self.errors[:, g, j]
        return frame

    def summary(self) -> Dict:
        return {
            "best_params": self.best_params.model_dump(),
            "score": self.best_score,
            "best_index": self.best_index,
            "groups": list(self.groups),
            "cis": list(self.cis),
            "n_combinations": int(self.errors.shape[0]),
        }
