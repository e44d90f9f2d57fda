# gearsim/services/sigproc_service.py
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np
from scipy import signal as sps
from scipy import stats
from scipy.interpolate import interp1d

from gearsim.errors import ConfigError
from gearsim.schemas.signal import ConditionIndicatorSet, DifferenceSignal, RecordedSignal, SyncAverage
from gearsim.services.logger import AppLogger

logger = AppLogger.get_logger(__name__)

DEFAULT_SIDEBANDS = 2


def angular_resample(recorded: RecordedSignal, points_per_rev: int, shaft_ratio: float = 1.0) -> np.ndarray:
    """Cut the signal into revolutions of the target shaft, P equal angle steps each.

    shaft_ratio is target-shaft revolutions per tach revolution. The shaft angle is
    taken as linear in time between consecutive tach pulses.
    """
    tach = np.asarray(recorded.tach, dtype=float)
    samples = np.asarray(recorded.samples, dtype=float)
    if tach.size < 2:
        raise ConfigError(f"need at least 2 tach pulses, got {tach.size}")
    if np.any(np.diff(tach) <= 0) or tach[0] < 0 or tach[-1] > samples.size - 1:
        raise ConfigError("tach pulses must be strictly increasing sample indices inside the record")
    if points_per_rev < 2 or shaft_ratio <= 0:
        raise ConfigError("points_per_rev must be >= 2 and shaft_ratio positive")

    n_revs = int(np.floor((tach.size - 1) * shaft_ratio + 1e-9))
    if n_revs < 1:
        raise ConfigError("record holds less than one full revolution of the target shaft")

    # target-shaft revolutions -> tach revolutions -> fractional sample index
    target = np.arange(n_revs * points_per_rev) / points_per_rev
    rev_to_index = interp1d(np.arange(tach.size, dtype=float), tach, kind="linear", assume_sorted=True)
    index = rev_to_index(target / shaft_ratio)
    kind = "cubic" if samples.size >= 4 else "linear"
    resampled = interp1d(np.arange(samples.size, dtype=float), samples, kind=kind, assume_sorted=True)(index)
    return resampled.reshape(n_revs, points_per_rev)


def synchronous_average(segments: np.ndarray) -> SyncAverage:
    segs = np.atleast_2d(np.asarray(segments, dtype=float))
    if segs.shape[0] < 1:
        raise ConfigError("synchronous average needs at least one segment")
    return SyncAverage(cycle_signal=segs.mean(axis=0), points_per_rev=segs.shape[1], n_cycles_averaged=segs.shape[0])


def removed_orders(points_per_rev: int, mesh_order: int, harmonics: Optional[int] = None,
                   sidebands: int = DEFAULT_SIDEBANDS) -> Tuple[int, ...]:
    """Orders zeroed for the difference signal: 0, k z and k z +- 1..S.

    By default every mesh harmonic below the Nyquist order is removed. Sideband
    orders at or above Nyquist have no bin to zero and are left out.
    """
    nyquist = points_per_rev / 2
    if mesh_order < 1 or sidebands < 0:
        raise ConfigError("mesh order must be >= 1 and sidebands >= 0")
    below = int(np.ceil(nyquist / mesh_order)) - 1
    if harmonics is None:
        harmonics = below
        if harmonics < 1:
            raise ConfigError(f"{points_per_rev} points per revolution cannot resolve mesh order {mesh_order}")
    elif harmonics > below:
        raise ConfigError(
            f"harmonic {harmonics} of mesh order {mesh_order} is beyond the Nyquist order {nyquist:g}"
        )
    orders = {0}
    for k in range(1, harmonics + 1):
        for s in range(-sidebands, sidebands + 1):
            orders.add(k * mesh_order + s)
    return tuple(sorted(o for o in orders if 0 <= o < nyquist))


def difference_signal(avg: SyncAverage, mesh_order: int, harmonics: Optional[int] = None,
                      sidebands: int = DEFAULT_SIDEBANDS) -> DifferenceSignal:
    x = np.asarray(avg.cycle_signal, dtype=float)
    orders = removed_orders(x.size, mesh_order, harmonics, sidebands)
    spectrum = np.fft.rfft(x)
    spectrum[list(orders)] = 0.0
    return DifferenceSignal(signal=np.fft.irfft(spectrum, n=x.size), removed_orders=orders)


def envelope(diff: DifferenceSignal) -> np.ndarray:
    x = np.asarray(diff.signal, dtype=float)
    if x.size == 0:
        raise ConfigError("envelope of an empty signal")
    return np.abs(sps.hilbert(x))


def _moments(x: np.ndarray, what: str) -> Tuple[float, float, float]:
    scale = float(np.max(np.abs(x))) if x.size else 0.0
    if scale == 0.0 or np.std(x) <= 1e-12 * scale:
        raise ConfigError(f"{what} has zero variance, moments are undefined")
    rms = float(np.sqrt(np.mean(x * x)))
    return rms, float(stats.skew(x)), float(stats.kurtosis(x, fisher=False))


def condition_indicators(diff: DifferenceSignal, env: np.ndarray) -> ConditionIndicatorSet:
    x = np.asarray(diff.signal, dtype=float)
    if x.size < 8:
        raise ConfigError(f"condition indicators need at least 8 points, got {x.size}")
    d_rms, d_skew, d_kurt = _moments(x, "difference signal")
    e_rms, e_skew, e_kurt = _moments(np.asarray(env, dtype=float), "envelope")
    return ConditionIndicatorSet(
        diff_rms=d_rms, diff_skewness=d_skew, diff_kurtosis=d_kurt,
        env_rms=e_rms, env_skewness=e_skew, env_kurtosis=e_kurt,
    )


def rms(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return np.sqrt(np.mean(x * x, axis=-1))


def healthy_rms_mean(signals: Iterable[np.ndarray]) -> float:
    values = [float(rms(s)) for s in signals]
    if not values:
        raise ConfigError("normalization needs at least one healthy signal")
    return float(np.mean(values))


def normalize_by_healthy(signals, healthy_rms: float) -> np.ndarray:
    if not healthy_rms > 0:
        raise ConfigError(f"healthy mean rms must be positive, got {healthy_rms}")
    return np.asarray(signals, dtype=float) / healthy_rms


def process_record(recorded: RecordedSignal, mesh_order: int, points_per_rev: int, shaft_ratio: float = 1.0,
                   harmonics: Optional[int] = None,
                   sidebands: int = DEFAULT_SIDEBANDS) -> Tuple[SyncAverage, DifferenceSignal]:
    """Resample, average and strip the mesh content of one record."""
    segments = angular_resample(recorded, points_per_rev, shaft_ratio)
    avg = synchronous_average(segments)
    diff = difference_signal(avg, mesh_order, harmonics, sidebands)
    logger.debug(f"{recorded.shaft_label} shaft: averaged {avg.n_cycles_averaged} revolutions, "
                 f"removed {len(diff.removed_orders)} orders")
    return avg, diff


def indicator_table_rows(diffs: Sequence[np.ndarray]) -> list:
    """CI rows (raw and log) for already-normalized difference signals."""
    rows = []
    for d in diffs:
        ds = DifferenceSignal(signal=np.asarray(d, dtype=float))
        cis = condition_indicators(ds, envelope(ds))
        rows.append({**cis.as_dict(), **cis.as_log_dict()})
    return rows
