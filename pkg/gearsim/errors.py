# gearsim/errors.py
from typing import Optional, Sequence


class GearSimError(Exception):
    """Base error; exit_code is what the command line returns for it."""

    exit_code = 1


class ConfigError(GearSimError):
    exit_code = 2


class NumericalError(GearSimError):
    exit_code = 3


class StorageError(GearSimError):
    exit_code = 4


class SingularSectionError(NumericalError):
    def __init__(self, message: str, index: int):
        super().__init__(message)
        self.index = index


class ContactLossError(NumericalError):
    pass


class SingularMatrixError(NumericalError):
    def __init__(self, message: str, cycle_index: int):
        super().__init__(message)
        self.cycle_index = cycle_index


class ConvergenceError(NumericalError):
    def __init__(self, message: str, time_s: float, residual_history: Sequence[float]):
        super().__init__(message)
        self.time_s = time_s
        self.residual_history = list(residual_history)


class DivergenceError(NumericalError):
    def __init__(self, message: str, time_s: Optional[float] = None):
        super().__init__(message)
        self.time_s = time_s


class BenchmarkError(NumericalError):
    pass
