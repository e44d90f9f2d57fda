# gearsim/services/solver_service.py
import math
import time
from collections import Counter
from typing import Dict, Optional, Tuple

import numpy as np
from scipy import linalg

from gearsim.errors import ConfigError, ConvergenceError, DivergenceError, SingularMatrixError
from gearsim.schemas.dynamics import CycleJacobianCache, DynamicModel, SimulationResult, SolverState
from gearsim.schemas.run_config import SolverSettings
from gearsim.services.logger import AppLogger

logger = AppLogger.get_logger(__name__)


def newmark_constants(settings: SolverSettings, dt: float) -> Dict[str, float]:
    beta, gamma = settings.newmark_beta, settings.newmark_gamma
    return {
        "a0": 1.0 / (beta * dt * dt),
        "a1": gamma / (beta * dt),
        "a2": 1.0 / (beta * dt),
        "a3": 1.0 / (2.0 * beta) - 1.0,
        "dt": dt,
        "gamma": gamma,
    }


def step_size(model: DynamicModel, settings: SolverSettings) -> float:
    dt = settings.dt if settings.dt is not None else model.dt
    if not dt > 0:
        raise ConfigError(f"time step must be positive, got {dt}")
    return dt


def precompute_cycle_jacobians(model: DynamicModel, settings: SolverSettings) -> CycleJacobianCache:
    """Invert the effective Newmark matrix once per reference cycle point."""
    consts = newmark_constants(settings, step_size(model, settings))
    m, c = model.matrices.mass, model.matrices.damping
    base = consts["a0"] * m + consts["a1"] * c
    inverses = np.empty_like(model.matrices.k_cycle)
    for i, k in enumerate(model.matrices.k_cycle):
        try:
            inverses[i] = linalg.inv(base + k, check_finite=True)
        except (linalg.LinAlgError, ValueError) as e:
            raise SingularMatrixError(f"effective matrix is singular at cycle point {i}: {e}", cycle_index=i) from e
        if not np.all(np.isfinite(inverses[i])):
            raise SingularMatrixError(f"effective matrix is singular at cycle point {i}", cycle_index=i)
    return CycleJacobianCache(inverses=inverses, a0=consts["a0"], a1=consts["a1"])


class _StepTables:
    """Per-step mesh stiffness, error load and cache index, tabulated before the march."""

    def __init__(self, model: DynamicModel, times: np.ndarray):
        if model.mesh_frequency > 0:
            phase = model.mesh_frequency * times
            grid = np.arange(model.gms_grid.size) / model.points_per_cycle
            self.gms = np.interp(phase, grid, model.gms_grid, period=model.grid_cycles)
            self.error_load = np.interp(phase, grid, model.error_load_grid, period=model.grid_cycles)
            self.index = np.rint(np.mod(phase, 1.0) * model.points_per_cycle).astype(np.int64) % model.points_per_cycle
        else:
            self.gms = np.zeros(times.size)
            self.error_load = np.zeros(times.size)
            self.index = np.zeros(times.size, dtype=np.int64)


def _force(model: DynamicModel, tables: _StepTables, n: int, t: float) -> np.ndarray:
    f = model.static_force - tables.error_load[n] * model.error_direction
    if model.load_fn is not None:
        f = f + model.load_fn(t)
    return f


def _stiffness(model: DynamicModel, tables: _StepTables, n: int) -> np.ndarray:
    return model.matrices.k_const + model.mesh_matrix * tables.gms[n]


def newmark_nr_step(state: SolverState, t_index: int, cache: CycleJacobianCache, model: DynamicModel,
                    settings: SolverSettings, tables: Optional[_StepTables] = None,
                    exact_jacobian: bool = False) -> Tuple[SolverState, int]:
    """Advance one step; returns the new state and the number of Newton corrections applied.

    Corrections reuse the cached inverse of the step's cycle point. If they stall at
    nr_max_iter the step is retried once with a freshly factorized exact Jacobian.
    """
    consts = newmark_constants(settings, step_size(model, settings))
    if tables is None:
        tables = _StepTables(model, np.arange(t_index + 1) * consts["dt"])
    if not (np.all(np.isfinite(state.u)) and np.all(np.isfinite(state.v)) and np.all(np.isfinite(state.a))):
        raise DivergenceError(f"non-finite state at t={state.time:.6g} s", time_s=state.time)

    dt, gamma = consts["dt"], consts["gamma"]
    a0, a2, a3 = consts["a0"], consts["a2"], consts["a3"]
    m, c = model.matrices.mass, model.matrices.damping
    t_next = t_index * dt
    k = _stiffness(model, tables, t_index)
    f = _force(model, tables, t_index, t_next)
    scale = float(np.linalg.norm(f)) or 1.0

    def residual(u):
        acc = a0 * (u - state.u) - a2 * state.v - a3 * state.a
        vel = state.v + dt * ((1 - gamma) * state.a + gamma * acc)
        return f - m @ acc - c @ vel - k @ u, vel, acc

    def solve(apply) -> Tuple[Optional[SolverState], int, list]:
        u = state.u.copy()
        history = []
        for it in range(settings.nr_max_iter + 1):
            r, vel, acc = residual(u)
            rel = float(np.linalg.norm(r)) / scale
            history.append(rel)
            if not math.isfinite(rel):
                raise DivergenceError(f"residual became non-finite at t={t_next:.6g} s", time_s=t_next)
            if rel < settings.nr_rel_tol:
                return SolverState(u=u, v=vel, a=acc, time=t_next), it, history
            if it == settings.nr_max_iter:
                break
            u = u + apply(r)
        return None, settings.nr_max_iter, history

    def fresh(r):
        return linalg.lu_solve(lu, r)

    if exact_jacobian:
        lu = linalg.lu_factor(a0 * m + consts["a1"] * c + k)
        result, iterations, history = solve(fresh)
    else:
        inverse = cache.inverses[tables.index[t_index]]
        result, iterations, history = solve(lambda r: inverse @ r)
        if result is None:
            logger.debug(f"Cached Jacobian stalled at t={t_next:.6g} s, refactorizing")
            lu = linalg.lu_factor(a0 * m + consts["a1"] * c + k)
            result, extra, retry = solve(fresh)
            iterations += extra
            history += retry
    if result is None:
        raise ConvergenceError(
            f"Newton-Raphson did not converge in {settings.nr_max_iter} iterations at t={t_next:.6g} s",
            time_s=t_next,
            residual_history=history,
        )
    return result, iterations


def equilibrium_state(model: DynamicModel) -> np.ndarray:
    """Static deflection under the cycle-mean stiffness and forces (least squares: free rotation)."""
    k_mean = model.matrices.k_const + model.mesh_matrix * float(np.mean(model.gms_grid))
    f_mean = model.static_force - float(np.mean(model.error_load_grid)) * model.error_direction
    u, *_ = np.linalg.lstsq(k_mean, f_mean, rcond=None)
    return u


def _initial_state(model: DynamicModel, settings: SolverSettings, tables: _StepTables,
                   perturbation: Optional[np.ndarray]) -> SolverState:
    n = model.layout.size
    u = equilibrium_state(model) if settings.start_from_equilibrium else np.zeros(n)
    v = np.zeros(n)
    if settings.initial_displacement is not None:
        if len(settings.initial_displacement) != n:
            raise ConfigError(f"initial_displacement needs {n} entries")
        u = u + np.asarray(settings.initial_displacement, dtype=float)
    if settings.initial_velocity is not None:
        if len(settings.initial_velocity) != n:
            raise ConfigError(f"initial_velocity needs {n} entries")
        v = v + np.asarray(settings.initial_velocity, dtype=float)
    if perturbation is not None:
        u = u + perturbation
    f0 = _force(model, tables, 0, 0.0)
    rhs = f0 - model.matrices.damping @ v - _stiffness(model, tables, 0) @ u
    a = np.linalg.solve(model.matrices.mass, rhs)
    return SolverState(u=u, v=v, a=a, time=0.0)


def _tach_pulses(angle: np.ndarray) -> np.ndarray:
    """Indices of the first sample at or past each multiple of 2 pi."""
    turns = np.floor(angle / (2 * np.pi))
    return np.flatnonzero(np.diff(turns) > 0) + 1


def integrate(model: DynamicModel, settings: SolverSettings, perturbation: Optional[np.ndarray] = None,
              exact_jacobian: bool = False) -> SimulationResult:
    """March the equations of motion over the model duration and collect the recorded channels."""
    started = time.perf_counter()
    dt = step_size(model, settings)
    n_steps = int(round(model.duration_s / dt))
    if n_steps < 1:
        raise ConfigError("duration is shorter than one time step")

    discard = 0
    if model.output_speed_hz:
        revolutions = model.duration_s * model.output_speed_hz
        if revolutions < 2:
            raise ConfigError(f"duration covers {revolutions:.2f} output revolutions, at least 2 are needed")
        discard = int(round(settings.transient_revolutions / model.output_speed_hz / dt))
        if discard >= n_steps:
            raise ConfigError("transient window covers the whole run")

    times = np.arange(n_steps + 1) * dt
    tables = _StepTables(model, times)
    cache = None if exact_jacobian else precompute_cycle_jacobians(model, settings)

    layout = model.layout
    recorded = tuple(dict.fromkeys(model.recorded_dofs + layout.accelerometer))
    rec_idx = np.array(layout.indices(*recorded))
    disp = np.empty((n_steps + 1, rec_idx.size))
    acc = np.empty((n_steps + 1, rec_idx.size))

    state = _initial_state(model, settings, tables, perturbation)
    disp[0], acc[0] = state.u[rec_idx], state.a[rec_idx]
    histogram: Counter = Counter()
    for n in range(1, n_steps + 1):
        try:
            state, iterations = newmark_nr_step(state, n, cache, model, settings, tables, exact_jacobian)
        except (ConvergenceError, DivergenceError):
            logger.error(f"Time march failed at step {n} of {n_steps}", exc_info=True)
            raise
        histogram[iterations] += 1
        disp[n], acc[n] = state.u[rec_idx], state.a[rec_idx]

    keep = slice(discard, n_steps + 1)
    accelerations = {name: acc[keep, j].copy() for j, name in enumerate(recorded) if layout.is_accelerometer(name)}
    displacements = {name: disp[keep, j].copy() for j, name in enumerate(recorded)}

    shaft_angles: Dict[str, np.ndarray] = {}
    tach = np.array([], dtype=np.int64)
    if model.input_speed_hz:
        t = times[keep]
        shaft_angles["pinion"] = 2 * np.pi * model.input_speed_hz * t + displacements.get("theta_p", 0.0)
        shaft_angles["gear"] = 2 * np.pi * model.output_speed_hz * t + displacements.get("theta_g", 0.0)
        tach = _tach_pulses(shaft_angles["pinion"])

    elapsed = time.perf_counter() - started
    logger.info(
        f"Integrated {n_steps} steps (dt={dt:.3e} s), discarded {discard}, "
        f"mean corrections {sum(k * v for k, v in histogram.items()) / n_steps:.2f} ({elapsed:.2f}s)"
    )
    return SimulationResult(
        time=times[keep].copy(),
        accelerations=accelerations,
        displacements=displacements,
        shaft_angles=shaft_angles,
        tach_pulses=tach,
        metadata={
            "steps": n_steps,
            "dt": dt,
            "discarded_samples": discard,
            "iteration_histogram": {str(k): histogram[k] for k in sorted(histogram)},
            "jacobian": "exact" if exact_jacobian else "cached",
        },
    )
