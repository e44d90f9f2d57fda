# gearsim/schemas/signal.py
import math
from dataclasses import dataclass, field
from typing import Dict, Tuple

import numpy as np

CI_NAMES: Tuple[str, ...] = ("diff_rms", "diff_skewness", "diff_kurtosis", "env_rms", "env_skewness", "env_kurtosis")
LOG_CI_NAMES: Tuple[str, ...] = (
    "log_diff_rms", "diff_skewness", "log_diff_kurtosis", "log_env_rms", "env_skewness", "log_env_kurtosis",
)
DEFAULT_ERROR_CIS: Tuple[str, ...] = ("log_diff_rms", "log_diff_kurtosis")


@dataclass(frozen=True, eq=False)
class RecordedSignal:
    samples: np.ndarray
    rate: float
    tach: np.ndarray
    shaft_label: str = "input"


@dataclass(frozen=True, eq=False)
class SyncAverage:
    cycle_signal: np.ndarray
    points_per_rev: int
    n_cycles_averaged: int


@dataclass(frozen=True, eq=False)
class DifferenceSignal:
    signal: np.ndarray
    removed_orders: Tuple[int, ...] = field(default_factory=tuple)

    @property
    def points_per_rev(self) -> int:
        return int(self.signal.size)


@dataclass(frozen=True)
class ConditionIndicatorSet:
    diff_rms: float
    diff_skewness: float
    diff_kurtosis: float
    env_rms: float
    env_skewness: float
    env_kurtosis: float

    def as_dict(self) -> Dict[str, float]:
        return {name: getattr(self, name) for name in CI_NAMES}

    def as_log_dict(self) -> Dict[str, float]:
        """Log of the strictly positive features (rms, kurtosis); skewness is kept as is."""
        return {
            "log_diff_rms": math.log(self.diff_rms),
            "diff_skewness": self.diff_skewness,
            "log_diff_kurtosis": math.log(self.diff_kurtosis),
            "log_env_rms": math.log(self.env_rms),
            "env_skewness": self.env_skewness,
            "log_env_kurtosis": math.log(self.env_kurtosis),
        }
