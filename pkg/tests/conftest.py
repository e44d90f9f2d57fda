# tests/conftest.py
import numpy as np
import pytest

from gearsim.config import load_preset
from gearsim.schemas.enhancement import SignalDataset
from gearsim.schemas.gear import GearPairSpec, GearWheelSpec
from gearsim.schemas.run_config import RunConfig


@pytest.fixture(autouse=True)
def _isolated_env(monkeypatch):
    for var in ("GEARSIM_OUTPUT_DIR", "GEARSIM_WORKERS"):
        monkeypatch.delenv(var, raising=False)


@pytest.fixture
def pinion() -> GearWheelSpec:
    return GearWheelSpec(tooth_count=17, module_mm=3.0, face_width_mm=20.0, hub_bore_radius_mm=10.0)


@pytest.fixture
def gear() -> GearWheelSpec:
    return GearWheelSpec(tooth_count=38, module_mm=3.0, face_width_mm=20.0, hub_bore_radius_mm=15.0)


@pytest.fixture
def pair(pinion, gear) -> GearPairSpec:
    return GearPairSpec(pinion=pinion, gear=gear)


def small_config(**overrides) -> RunConfig:
    """Tooth-breakage setup shortened to a fraction of a second with coarse grids."""
    payload = load_preset("tooth-breakage").config.model_dump(mode="json")
    payload["conditions"]["duration_s"] = 0.2
    payload["stiffness"] = {"n_points": 200, "n_cyc": 64, "n_flank_points": 16}
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(payload.get(key), dict):
            payload[key] = {**payload[key], **value}
        else:
            payload[key] = value
    return RunConfig.model_validate(payload)


@pytest.fixture(scope="session")
def config_factory():
    return small_config


def synthetic_dataset(n_per_group: int = 4, points: int = 256, seed: int = 3) -> SignalDataset:
    """Healthy mesh-like residue plus a localized impact for each fault group."""
    rng = np.random.default_rng(seed)
    theta = 2 * np.pi * np.arange(points) / points
    labels, signals = [], []
    for label, impact in (("healthy", 0.0), ("fault_small", 1.5), ("fault_large", 4.0)):
        for _ in range(n_per_group):
            base = sum(np.sin(k * theta + rng.uniform(0, 2 * np.pi)) / k for k in (3, 5, 11))
            base = base + 0.2 * rng.standard_normal(points)
            pulse = impact * np.exp(-0.5 * ((np.arange(points) - points / 3) / 4.0) ** 2)
            signals.append(base + pulse)
            labels.append(label)
    return SignalDataset(labels=tuple(labels), signals=np.array(signals))


@pytest.fixture
def dataset() -> SignalDataset:
    return synthetic_dataset()
