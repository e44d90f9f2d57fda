# gearsim/services/enhancement_service.py
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy import signal as sps
from scipy import stats
from scipy.interpolate import interp1d
from tqdm import tqdm

from gearsim.errors import ConfigError
from gearsim.schemas.enhancement import PARAM_COLUMNS, EnhancementParams, ErrorTable, GridSpec, SignalDataset
from gearsim.schemas.signal import DifferenceSignal
from gearsim.services.logger import AppLogger
from gearsim.services.sigproc_service import healthy_rms_mean, normalize_by_healthy, rms

logger = AppLogger.get_logger(__name__)

MIN_WIDTH_POINTS = 4

SeedLike = Union[int, np.random.SeedSequence, Sequence[int]]


def energy_centroid(x: np.ndarray) -> float:
    x = np.asarray(x, dtype=float)
    energy = x * x
    total = energy.sum()
    if total <= 0:
        return (x.size - 1) / 2
    return float(np.dot(np.arange(x.size), energy) / total)


def _rescale_about_centroid(x: np.ndarray, ratio: float) -> np.ndarray:
    """y(k) = x(c + (k - c) / ratio): shrinks (ratio < 1) or stretches the signal about its centroid c."""
    n = x.size
    if ratio * n < MIN_WIDTH_POINTS:
        raise ConfigError(f"width ratio {ratio:g} leaves fewer than {MIN_WIDTH_POINTS} of {n} points")
    if ratio == 1.0:
        return x.copy()
    c = energy_centroid(x)
    source = c + (np.arange(n) - c) / ratio
    kind = "cubic" if n >= 4 else "linear"
    # outside the source support the result is zero padding
    f = interp1d(np.arange(n, dtype=float), x, kind=kind, bounds_error=False, fill_value=0.0, assume_sorted=True)
    return f(source)


def modify_width(diff: DifferenceSignal, ratio: float) -> DifferenceSignal:
    if not ratio > 0:
        raise ConfigError(f"width ratio must be positive, got {ratio}")
    x = np.asarray(diff.signal, dtype=float)
    return DifferenceSignal(signal=_rescale_about_centroid(x, ratio), removed_orders=diff.removed_orders)


def mix_fault_harmonics(diff: DifferenceSignal, diff_healthy: DifferenceSignal, alpha: float) -> DifferenceSignal:
    x = np.asarray(diff.signal, dtype=float)
    h = np.asarray(diff_healthy.signal, dtype=float)
    if x.shape != h.shape:
        raise ConfigError(f"cannot mix signals of {x.size} and {h.size} points")
    return DifferenceSignal(signal=alpha * x + (1.0 - alpha) * h, removed_orders=diff.removed_orders)


def inject_noise(signal, noise_level: float, seed: SeedLike, n_realizations: int = 1) -> np.ndarray:
    """n_realizations noisy copies, shape (n_realizations, P)."""
    if noise_level < 0:
        raise ConfigError(f"noise level must be non-negative, got {noise_level}")
    if n_realizations < 1:
        raise ConfigError("need at least one noise realization")
    x = np.asarray(signal, dtype=float)
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal((n_realizations,) + x.shape)
    return x[None, ...] + noise_level * noise


def combination_seed(master_seed: int, index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([master_seed, index])


def log_indicators(signals: np.ndarray, cis: Sequence[str]) -> np.ndarray:
    """Log-transformed condition indicators along the last axis, shape (..., len(cis))."""
    x = np.asarray(signals, dtype=float)
    if x.shape[-1] < 8:
        raise ConfigError(f"condition indicators need at least 8 points, got {x.shape[-1]}")
    scale = np.max(np.abs(x), axis=-1)
    if np.any((scale == 0) | (np.std(x, axis=-1) <= 1e-12 * scale)):
        raise ConfigError("difference signal has zero variance, moments are undefined")
    values: Dict[str, np.ndarray] = {}
    if any("env_" in c for c in cis):
        env = np.abs(sps.hilbert(x, axis=-1))
        values["log_env_rms"] = np.log(rms(env))
        values["env_skewness"] = stats.skew(env, axis=-1)
        values["log_env_kurtosis"] = np.log(stats.kurtosis(env, axis=-1, fisher=False))
    values["log_diff_rms"] = np.log(rms(x))
    values["diff_skewness"] = stats.skew(x, axis=-1)
    values["log_diff_kurtosis"] = np.log(stats.kurtosis(x, axis=-1, fisher=False))
    return np.stack([values[c] for c in cis], axis=-1)


def experimental_sigma(exp_ci: pd.DataFrame, cis: Sequence[str]) -> np.ndarray:
    """Sample standard deviation of each CI over every experimental signal."""
    if len(exp_ci) < 2:
        raise ConfigError("at least two experimental signals are needed to estimate the CI spread")
    sigma = exp_ci[list(cis)].to_numpy(dtype=float).std(axis=0, ddof=1)
    flat = [c for c, s in zip(cis, sigma) if not s > 0]
    if flat:
        raise ConfigError(f"experimental CI spread is zero for {flat}")
    return sigma


def _group_means(ci: pd.DataFrame, cis: Sequence[str]) -> pd.DataFrame:
    return ci.groupby("label", sort=False)[list(cis)].mean()


def _shared_groups(sim_groups: Sequence[str], exp_groups: Sequence[str]) -> Tuple[str, ...]:
    missing = [g for g in sim_groups if g not in exp_groups]
    if missing:
        raise ConfigError(f"simulated health states {missing} have no experimental counterpart")
    extra = [g for g in exp_groups if g not in sim_groups]
    if extra:
        logger.warning(f"Experimental health states {extra} have no simulated counterpart and are not scored")
    return tuple(sim_groups)


def ci_error(sim_ci: pd.DataFrame, exp_ci: pd.DataFrame, cis: Sequence[str],
             sigma: Optional[np.ndarray] = None) -> Tuple[np.ndarray, Tuple[str, ...]]:
    """Per (group, CI) error between group-mean CIs, normalized by the experimental spread.

    Both tables carry a 'label' column with the health state of each signal.
    Returns the (n_groups, n_cis) error matrix and the group order.
    """
    cis = list(cis)
    missing = [c for c in cis + ["label"] if c not in sim_ci.columns or c not in exp_ci.columns]
    if missing:
        raise ConfigError(f"CI tables lack columns {missing}")
    if sigma is None:
        sigma = experimental_sigma(exp_ci, cis)
    sim_means = _group_means(sim_ci, cis)
    exp_means = _group_means(exp_ci, cis)
    groups = _shared_groups(list(sim_means.index), list(exp_means.index))
    diff = sim_means.loc[list(groups)].to_numpy(dtype=float) - exp_means.loc[list(groups)].to_numpy(dtype=float)
    return np.abs(diff) / sigma[None, :], groups


@dataclass(frozen=True, eq=False)
class _TuneContext:
    """Everything one grid combination needs; shipped once per worker chunk."""

    sim: np.ndarray  # normalized simulated difference signals (n, P)
    labels: Tuple[str, ...]
    healthy: np.ndarray
    groups: Tuple[str, ...]
    exp_means: np.ndarray  # (n_groups, n_cis)
    sigma: np.ndarray
    grid: GridSpec

    def widened(self, ratio: float) -> np.ndarray:
        return np.stack([_rescale_about_centroid(row, ratio) for row in self.sim])

    def enhanced(self, index: int, widened: Optional[np.ndarray] = None) -> np.ndarray:
        """Width, mix, noise and renormalization for one combination, shape (n, n_noise, P)."""
        params = self.grid.combination(index)
        w = self.widened(params.width_ratio) if widened is None else widened
        healthy_ref = w[self.healthy].mean(axis=0)
        mixed = w.copy()
        faulty = ~self.healthy
        mixed[faulty] = params.fault_to_harmonics * w[faulty] + (1.0 - params.fault_to_harmonics) * healthy_ref
        noisy = inject_noise(mixed, params.noise_level, combination_seed(self.grid.seed, index), self.grid.n_noise)
        noisy = np.moveaxis(noisy, 0, 1)
        return normalize_by_healthy(noisy, healthy_rms_mean(noisy[self.healthy].reshape(-1, noisy.shape[-1])))

    def signal_cis(self, index: int, widened: Optional[np.ndarray] = None) -> np.ndarray:
        """Per-signal CIs averaged over the noise realizations, shape (n, n_cis)."""
        return log_indicators(self.enhanced(index, widened), self.grid.cis).mean(axis=1)

    def errors(self, index: int, widened: Optional[np.ndarray] = None) -> np.ndarray:
        per_signal = self.signal_cis(index, widened)
        labels = np.asarray(self.labels)
        means = np.stack([per_signal[labels == g].mean(axis=0) for g in self.groups])
        return np.abs(means - self.exp_means) / self.sigma[None, :]


def _evaluate_chunk(context: _TuneContext, indices: List[int]) -> Tuple[List[int], np.ndarray]:
    cache: Dict[float, np.ndarray] = {}
    out = np.empty((len(indices), len(context.groups), len(context.grid.cis)))
    for n, index in enumerate(indices):
        ratio = context.grid.combination(index).width_ratio
        if ratio not in cache:
            cache.clear()
            cache[ratio] = context.widened(ratio)
        out[n] = context.errors(index, cache[ratio])
    return indices, out


def _dataset_cis(signals: np.ndarray, labels: Sequence[str], cis: Sequence[str]) -> pd.DataFrame:
    frame = pd.DataFrame(log_indicators(signals, cis), columns=list(cis))
    frame.insert(0, "label", list(labels))
    return frame


def normalized_experimental_cis(exp: SignalDataset, grid: GridSpec) -> pd.DataFrame:
    exp.require_label(grid.healthy_label, "experimental")
    normed = normalize_by_healthy(exp.signals, healthy_rms_mean(exp.signals[exp.mask(grid.healthy_label)]))
    return _dataset_cis(normed, exp.labels, grid.cis)


def _build_context(sim: SignalDataset, exp: SignalDataset, grid: GridSpec) -> Tuple[_TuneContext, pd.DataFrame]:
    sim.require_label(grid.healthy_label, "simulated")
    if sim.points_per_rev != exp.points_per_rev:
        raise ConfigError(
            f"simulated ({sim.points_per_rev}) and experimental ({exp.points_per_rev}) points per revolution differ"
        )
    exp_ci = normalized_experimental_cis(exp, grid)
    sigma = experimental_sigma(exp_ci, grid.cis)
    groups = _shared_groups(list(sim.groups), list(exp.groups))
    exp_means = _group_means(exp_ci, grid.cis).loc[list(groups)].to_numpy(dtype=float)
    healthy = sim.mask(grid.healthy_label)
    normed = normalize_by_healthy(sim.signals, healthy_rms_mean(sim.signals[healthy]))
    context = _TuneContext(
        sim=normed, labels=tuple(sim.labels), healthy=healthy, groups=groups,
        exp_means=exp_means, sigma=sigma, grid=grid,
    )
    return context, exp_ci


def _combination_frame(grid: GridSpec) -> pd.DataFrame:
    rows = [grid.combination(i).as_tuple() for i in range(grid.size)]
    return pd.DataFrame(rows, columns=list(PARAM_COLUMNS))


def _breakdown(context: _TuneContext, names: Sequence[str], index: int) -> pd.DataFrame:
    per_signal = context.signal_cis(index)
    frame = pd.DataFrame(per_signal, columns=list(context.grid.cis))
    frame.insert(0, "label", list(context.labels))
    frame.insert(0, "signal", list(names))
    for j, ci in enumerate(context.grid.cis):
        ref = {g: context.exp_means[k, j] for k, g in enumerate(context.groups)}
        frame[f"err_{ci}"] = np.abs(frame[ci] - frame["label"].map(ref)) / context.sigma[j]
    return frame


def tune(sim: SignalDataset, exp: SignalDataset, grid: GridSpec, workers: int = 1,
         progress: bool = False) -> Tuple[EnhancementParams, ErrorTable]:
    """Exhaustive grid search for the enhancement parameters closest to the measured CIs.

    Combinations are chunked by width ratio. Each combination draws its noise from
    (grid.seed, combination index), so any worker count gives the same table.
    """
    started = time.perf_counter()
    if grid.size == 0:
        raise ConfigError("enhancement grid is empty")
    context, _ = _build_context(sim, exp, grid)
    n_r, n_a, n_n = grid.shape
    per_ratio = n_a * n_n
    chunks = [list(range(i * per_ratio, (i + 1) * per_ratio)) for i in range(n_r)]
    errors = np.empty((grid.size, len(context.groups), len(grid.cis)))

    bar = tqdm(total=grid.size, desc="grid search", unit="combo", disable=not progress)
    try:
        if workers <= 1:
            for chunk in chunks:
                idx, out = _evaluate_chunk(context, chunk)
                errors[idx] = out
                bar.update(len(idx))
        else:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                futures = [pool.submit(_evaluate_chunk, context, chunk) for chunk in chunks]
                for future in futures:
                    idx, out = future.result()
                    errors[idx] = out
                    bar.update(len(idx))
    except ConfigError:
        raise
    except Exception as e:
        logger.error(f"Grid search failed: {e}", exc_info=True)
        raise
    finally:
        bar.close()

    combos = _combination_frame(grid)
    provisional = ErrorTable(combinations=combos, errors=errors, groups=context.groups,
                             cis=tuple(grid.cis), breakdown=pd.DataFrame())
    best = provisional.best_index
    table = ErrorTable(
        combinations=combos, errors=errors, groups=context.groups, cis=tuple(grid.cis),
        breakdown=_breakdown(context, sim.names, best),
    )
    logger.info(
        f"Evaluated {grid.size} combinations over {len(context.groups)} health states: best "
        f"{table.best_params.as_tuple()} score {table.best_score:.4g} ({time.perf_counter() - started:.2f}s)"
    )
    return table.best_params, table


def enhance_dataset(sim: SignalDataset, params: EnhancementParams, seed: int = 0, n_noise: int = 1,
                    healthy_label: str = "healthy") -> SignalDataset:
    """Apply one parameter triple to a simulated dataset; realizations become separate records."""
    grid = GridSpec(
        width_ratios=[params.width_ratio], fault_to_harmonics=[params.fault_to_harmonics],
        noise_levels=[params.noise_level], n_noise=n_noise, seed=seed, healthy_label=healthy_label,
    )
    sim.require_label(healthy_label, "simulated")
    healthy = sim.mask(healthy_label)
    context = _TuneContext(
        sim=normalize_by_healthy(sim.signals, healthy_rms_mean(sim.signals[healthy])),
        labels=tuple(sim.labels), healthy=healthy, groups=sim.groups,
        exp_means=np.zeros((len(sim.groups), len(grid.cis))), sigma=np.ones(len(grid.cis)), grid=grid,
    )
    out = context.enhanced(0)
    labels = tuple(lab for lab in sim.labels for _ in range(n_noise))
    names = tuple(f"{name}_n{k}" for name in sim.names for k in range(n_noise))
    return SignalDataset(labels=labels, signals=out.reshape(-1, out.shape[-1]), names=names)


def replay_ci_tables(fixture: Dict) -> Tuple[EnhancementParams, ErrorTable]:
    """Score stored simulated CI tables against a stored experimental table.

    fixture: {"ci_columns": [...], "experimental": [rows], "combinations": [{"width_ratio",
    "fault_to_harmonics", "noise_level", "simulated": [rows]}]}, each row a dict with
    'label' plus one value per CI column.
    """
    try:
        cis = list(fixture["ci_columns"])
        exp_ci = pd.DataFrame(fixture["experimental"])
        combos = fixture["combinations"]
    except (KeyError, TypeError) as e:
        raise ConfigError(f"malformed CI fixture: missing {e}") from e
    if not combos:
        raise ConfigError("CI fixture holds no combinations")
    sigma = experimental_sigma(exp_ci, cis)

    errors = []
    groups: Tuple[str, ...] = ()
    for combo in combos:
        err, groups_c = ci_error(pd.DataFrame(combo["simulated"]), exp_ci, cis, sigma)
        if groups and groups_c != groups:
            raise ConfigError("combinations in the CI fixture cover different health states")
        groups = groups_c
        errors.append(err)
    frame = pd.DataFrame([[float(c[p]) for p in PARAM_COLUMNS] for c in combos], columns=list(PARAM_COLUMNS))
    table = ErrorTable(combinations=frame, errors=np.stack(errors), groups=groups, cis=tuple(cis),
                       breakdown=pd.DataFrame())
    logger.info(f"Replayed {len(combos)} stored combinations: best {table.best_params.as_tuple()}")
    return table.best_params, table


