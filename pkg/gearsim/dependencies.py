# gearsim/dependencies.py
from pathlib import Path
from typing import Optional

from gearsim.config import get_default_workers
from gearsim.errors import ConfigError
from gearsim.services.feature_service import FeatureService
from gearsim.services.plot_service import PlotDataService
from gearsim.services.simulation_service import SimulationService
from gearsim.services.storage_service import StorageService


def get_storage(root: Path) -> StorageService:
    return StorageService(root)


def get_simulation_service(root: Path) -> SimulationService:
    return SimulationService(get_storage(root))


def get_feature_service(root: Path) -> FeatureService:
    """Feature outputs land under root; input paths are taken as given"""
    return FeatureService(get_storage(root))


def get_workers(requested: Optional[int] = None) -> int:
    if requested is None:
        return get_default_workers()
    if requested < 1:
        raise ConfigError("--workers must be at least 1")
    return requested


def get_plot_data_service(root: Path) -> PlotDataService:
    return PlotDataService(get_storage(root))
