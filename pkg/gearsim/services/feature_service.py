# gearsim/services/feature_service.py
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from gearsim.errors import ConfigError
from gearsim.schemas.enhancement import HEALTHY_LABEL, SignalDataset
from gearsim.schemas.signal import CI_NAMES, LOG_CI_NAMES, RecordedSignal
from gearsim.services.logger import AppLogger
from gearsim.services.sigproc_service import (
    DEFAULT_SIDEBANDS,
    healthy_rms_mean,
    indicator_table_rows,
    normalize_by_healthy,
    process_record,
)
from gearsim.services.simulation_service import ACCEL_COLUMNS, INDEX_FILE, MANIFEST_FILE, SIGNAL_FILE
from gearsim.services.storage_service import StorageService

logger = AppLogger.get_logger(__name__)

CI_TABLE_FILE = "ci_table.csv"
DIFF_FILE = "difference_signals.csv"
SYNC_FILE = "sync_averages.csv"
ACCEL_FALLBACKS = ("accel_ms2", "accel_y_ms2")


@dataclass(frozen=True)
class FeatureSettings:
    shaft: str = "input"
    points_per_rev: int = 1024
    sidebands: int = DEFAULT_SIDEBANDS
    harmonics: Optional[int] = None
    mesh_order: Optional[int] = None  # tooth count of the averaged shaft, for bare CSV records
    shaft_ratio: Optional[float] = None  # averaged-shaft revolutions per tach revolution
    healthy_label: str = HEALTHY_LABEL

    def __post_init__(self):
        if self.shaft not in ("input", "output"):
            raise ConfigError(f"shaft must be 'input' or 'output', got '{self.shaft}'")


@dataclass(frozen=True, eq=False)
class LoadedRecord:
    name: str
    label: str
    signal: RecordedSignal
    mesh_order: int
    shaft_ratio: float


@dataclass(frozen=True, eq=False)
class FeatureTables:
    ci_table: pd.DataFrame
    difference_signals: pd.DataFrame
    sync_averages: pd.DataFrame

    def dataset(self) -> SignalDataset:
        return dataset_from_tables(self.ci_table, self.difference_signals)


def dataset_from_tables(ci_table: pd.DataFrame, diffs: pd.DataFrame) -> SignalDataset:
    names = [c for c in diffs.columns if c != "angle_rad"]
    labels = dict(zip(ci_table["signal"], ci_table["label"]))
    missing = [n for n in names if n not in labels]
    if missing:
        raise ConfigError(f"difference signals {missing} have no row in the CI table")
    return SignalDataset(
        labels=tuple(str(labels[n]) for n in names),
        signals=diffs[names].to_numpy(dtype=float).T,
        names=tuple(names),
    )


def shaft_parameters(teeth: Dict[str, int], shaft: str) -> Tuple[int, float]:
    """Mesh order and revolutions per input revolution of the averaged shaft."""
    if shaft == "input":
        return int(teeth["pinion"]), 1.0
    return int(teeth["gear"]), teeth["pinion"] / teeth["gear"]


def simulation_record(storage: StorageService, run_dir: Path, settings: FeatureSettings) -> LoadedRecord:
    manifest = storage.read_json(run_dir / MANIFEST_FILE)
    frame = storage.read_csv(run_dir / SIGNAL_FILE)
    column = ACCEL_COLUMNS[manifest.get("accelerometer_dof", "y_c")]
    teeth = manifest["tooth_counts"]
    tach = np.asarray(manifest.get("tach_pulses", []), dtype=np.int64)
    if tach.size < 2:
        raise ConfigError(f"{run_dir} carries fewer than 2 tach pulses")
    order, ratio = shaft_parameters(teeth, settings.shaft)
    signal = RecordedSignal(
        samples=frame[column].to_numpy(dtype=float),
        rate=float(manifest["sampling_rate_hz"]),
        tach=tach,
        shaft_label=manifest.get("tach_shaft", "input"),
    )
    return LoadedRecord(name=run_dir.name, label=str(manifest["health_state"]), signal=signal,
                        mesh_order=order, shaft_ratio=ratio)


def _csv_record(storage: StorageService, path: Path, settings: FeatureSettings) -> LoadedRecord:
    """Measured record: time_s, an acceleration column and a 0/1 'tach' pulse column."""
    frame = storage.read_csv(path)
    if "tach" not in frame.columns:
        raise ConfigError(f"{path} has no 'tach' column")
    column = next((c for c in ACCEL_FALLBACKS if c in frame.columns), None)
    if column is None or "time_s" not in frame.columns:
        raise ConfigError(f"{path} needs time_s and one of {list(ACCEL_FALLBACKS)}")
    if settings.mesh_order is None:
        raise ConfigError(f"{path}: the mesh order of the averaged shaft must be given for CSV records")
    time_s = frame["time_s"].to_numpy(dtype=float)
    rate = 1.0 / float(np.median(np.diff(time_s))) if time_s.size > 1 else 0.0
    label = str(frame["label"].iloc[0]) if "label" in frame.columns and len(frame) else path.parent.name
    signal = RecordedSignal(
        samples=frame[column].to_numpy(dtype=float),
        rate=rate,
        tach=np.flatnonzero(frame["tach"].to_numpy() != 0),
        shaft_label="input",
    )
    return LoadedRecord(name=path.stem, label=label, signal=signal, mesh_order=settings.mesh_order,
                        shaft_ratio=settings.shaft_ratio or 1.0)


def _expand(inputs: Sequence[Path]) -> List[Path]:
    """Simulation directories (or batch roots holding them) and CSV files, in a stable order."""
    found: List[Path] = []
    for item in inputs:
        item = Path(item).absolute()
        if item.is_file():
            found.append(item)
        elif (item / MANIFEST_FILE).exists():
            found.append(item)
        elif item.is_dir():
            runs = sorted(p for p in item.iterdir() if (p / MANIFEST_FILE).exists())
            csvs = sorted(p for p in item.rglob("*.csv")) if not runs and not (item / INDEX_FILE).exists() else []
            if not runs and not csvs:
                raise ConfigError(f"{item} holds no simulation runs or CSV records")
            found.extend(runs + csvs)
        else:
            raise ConfigError(f"input {item} does not exist")
    return found


def _unique(names: List[str]) -> List[str]:
    seen: Dict[str, int] = {}
    out = []
    for n in names:
        k = seen.get(n, 0)
        seen[n] = k + 1
        out.append(n if k == 0 else f"{n}_{k}")
    return out


class FeatureService:
    def __init__(self, storage: StorageService):
        self.storage = storage

    def load(self, inputs: Sequence[Path], settings: FeatureSettings) -> List[LoadedRecord]:
        records = []
        for path in _expand(inputs):
            if path.is_dir():
                records.append(simulation_record(self.storage, path, settings))
            else:
                records.append(_csv_record(self.storage, path, settings))
        return records

    def extract(self, records: Sequence[LoadedRecord], settings: FeatureSettings) -> FeatureTables:
        """Synchronous average, difference signal and CIs per record, normalized by the healthy mean rms."""
        if not records:
            raise ConfigError("no records to process")
        labels = [r.label for r in records]
        if settings.healthy_label not in labels:
            raise ConfigError(
                f"no '{settings.healthy_label}' records among the inputs; a healthy set is needed for normalization"
            )
        averages, diffs = [], []
        for rec in records:
            avg, diff = process_record(rec.signal, rec.mesh_order, settings.points_per_rev, rec.shaft_ratio,
                                       settings.harmonics, settings.sidebands)
            averages.append(avg.cycle_signal)
            diffs.append(diff.signal)
        diffs_arr = np.stack(diffs)
        healthy = np.array([lab == settings.healthy_label for lab in labels])
        scale = healthy_rms_mean(diffs_arr[healthy])
        normed = normalize_by_healthy(diffs_arr, scale)
        names = _unique([r.name for r in records])

        rows = indicator_table_rows(normed)
        ci_table = pd.DataFrame(rows)
        columns = list(CI_NAMES) + [c for c in LOG_CI_NAMES if c not in CI_NAMES]
        ci_table = ci_table[columns]
        ci_table.insert(0, "label", labels)
        ci_table.insert(0, "signal", names)

        angle = 2 * np.pi * np.arange(settings.points_per_rev) / settings.points_per_rev
        diff_frame = pd.DataFrame({"angle_rad": angle, **{n: normed[i] for i, n in enumerate(names)}})
        sync_frame = pd.DataFrame({"angle_rad": angle, **{n: averages[i] for i, n in enumerate(names)}})
        logger.info(
            f"Extracted features for {len(records)} records on the {settings.shaft} shaft "
            f"({int(healthy.sum())} healthy, normalization rms {scale:.4g})"
        )
        return FeatureTables(ci_table=ci_table, difference_signals=diff_frame, sync_averages=sync_frame)

    def write(self, tables: FeatureTables) -> None:
        self.storage.write_csv(CI_TABLE_FILE, tables.ci_table)
        self.storage.write_csv(DIFF_FILE, tables.difference_signals)
        self.storage.write_csv(SYNC_FILE, tables.sync_averages)

    def load_dataset(self, source: Path, settings: FeatureSettings) -> SignalDataset:
        """Feature output directory if present, otherwise process the raw records in memory."""
        source = Path(source).absolute()
        if (source / DIFF_FILE).exists() and (source / CI_TABLE_FILE).exists():
            return dataset_from_tables(self.storage.read_csv(source / CI_TABLE_FILE),
                                       self.storage.read_csv(source / DIFF_FILE))
        return self.extract(self.load([source], settings), settings).dataset()
