# gearsim/schemas/dynamics.py
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Optional, Tuple

import numpy as np

DOF_NAMES: Tuple[str, ...] = (
    "x_p", "y_p", "z_p", "theta_p",
    "x_g", "y_g", "z_g", "theta_g",
    "theta_m", "theta_l",
    "x_c", "y_c", "z_c",
)
ACCELEROMETER_DOFS: Tuple[str, ...] = ("x_c", "y_c", "z_c")


@dataclass(frozen=True)
class DofLayout:
    names: Tuple[str, ...] = DOF_NAMES
    accelerometer: Tuple[str, ...] = ACCELEROMETER_DOFS

    def __post_init__(self):
        if len(set(self.names)) != len(self.names):
            raise ValueError("degree-of-freedom names must be unique")
        missing = [n for n in self.accelerometer if n not in self.names]
        if missing:
            raise ValueError(f"accelerometer DOFs {missing} not in layout")

    @property
    def size(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        return self.names.index(name)

    def indices(self, *names: str) -> Tuple[int, ...]:
        return tuple(self.index(n) for n in names)

    def is_accelerometer(self, name: str) -> bool:
        return name in self.accelerometer


@dataclass(frozen=True, eq=False)
class GeomCoefficients:
    """Mesh projection (g0 + z g1)(g0 + z g1)^T split by powers of the face-width coordinate z."""

    line_of_action: np.ndarray  # g0
    twist: np.ndarray  # g1, per unit z
    geom_z_indep: np.ndarray  # g0 g0^T
    geom_z_dep: np.ndarray  # [g0 g1^T + g1 g0^T, g1 g1^T]
    expectation_matrix: np.ndarray  # [E z, E z^2] over the face width
    face_width: float

    def at(self, z: float) -> np.ndarray:
        g = self.line_of_action + z * self.twist
        return np.outer(g, g)

    @property
    def effective(self) -> np.ndarray:
        return self.geom_z_indep + np.tensordot(self.expectation_matrix, self.geom_z_dep, axes=1)

    @property
    def effective_direction(self) -> np.ndarray:
        """Force direction of the mesh-error load, averaged over the face width."""
        return self.line_of_action + self.expectation_matrix[0] * self.twist


@dataclass(frozen=True, eq=False)
class SystemMatrices:
    mass: np.ndarray
    damping: np.ndarray
    k_const: np.ndarray
    k_cycle: np.ndarray  # [cycle point, dof, dof] over one reference mesh cycle
    f_ex: np.ndarray  # [cycle point, dof]

    @property
    def mean_stiffness(self) -> np.ndarray:
        return self.k_cycle.mean(axis=0)


@dataclass(frozen=True, eq=False)
class DynamicModel:
    """Everything the time march needs.

    K(t) = k_const + mesh_matrix * gms(t); F(t) = static_force - gms(t) ste(t) error_direction,
    with gms and ste tabulated over grid_cycles mesh cycles of pinion rotation.
    """

    layout: DofLayout
    matrices: SystemMatrices
    mesh_matrix: np.ndarray
    error_direction: np.ndarray
    static_force: np.ndarray
    gms_grid: np.ndarray
    error_load_grid: np.ndarray
    grid_cycles: int
    points_per_cycle: int
    mesh_frequency: float
    duration_s: float
    sampling_rate_hz: float
    input_speed_hz: Optional[float] = None
    output_speed_hz: Optional[float] = None
    recorded_dofs: Tuple[str, ...] = ()
    load_fn: Optional[Callable[[float], np.ndarray]] = None

    @property
    def dt(self) -> float:
        return 1.0 / self.sampling_rate_hz

    @property
    def n_steps(self) -> int:
        return int(round(self.duration_s * self.sampling_rate_hz))

    @classmethod
    def linear(cls, mass, damping, stiffness, sampling_rate_hz: float, duration_s: float,
               load_fn: Optional[Callable[[float], np.ndarray]] = None, names: Optional[Tuple[str, ...]] = None):
        """Constant-stiffness model, used for verifying the integrator on textbook systems."""
        m = np.atleast_2d(np.asarray(mass, dtype=float))
        c = np.atleast_2d(np.asarray(damping, dtype=float))
        k = np.atleast_2d(np.asarray(stiffness, dtype=float))
        n = m.shape[0]
        names = names or tuple(f"q{i}" for i in range(n))
        layout = DofLayout(names=names, accelerometer=names)
        n_cyc = 1
        matrices = SystemMatrices(mass=m, damping=c, k_const=k, k_cycle=k[None, :, :].copy(),
                                  f_ex=np.zeros((n_cyc, n)))
        return cls(
            layout=layout,
            matrices=matrices,
            mesh_matrix=np.zeros((n, n)),
            error_direction=np.zeros(n),
            static_force=np.zeros(n),
            gms_grid=np.zeros(n_cyc),
            error_load_grid=np.zeros(n_cyc),
            grid_cycles=1,
            points_per_cycle=n_cyc,
            mesh_frequency=0.0,
            duration_s=duration_s,
            sampling_rate_hz=sampling_rate_hz,
            recorded_dofs=names,
            load_fn=load_fn,
        )


@dataclass(frozen=True, eq=False)
class CycleJacobianCache:
    """Inverse of a0 M + a1 C + K(cyc_i) for every reference cycle point."""

    inverses: np.ndarray
    a0: float
    a1: float

    def __len__(self) -> int:
        return self.inverses.shape[0]


@dataclass(eq=False)
class SolverState:
    u: np.ndarray
    v: np.ndarray
    a: np.ndarray
    time: float = 0.0


@dataclass(frozen=True, eq=False)
class SimulationResult:
    time: np.ndarray
    accelerations: Dict[str, np.ndarray]
    displacements: Dict[str, np.ndarray]
    shaft_angles: Dict[str, np.ndarray]
    tach_pulses: np.ndarray
    metadata: Dict[str, Any] = field(default_factory=dict)

    @property
    def n_samples(self) -> int:
        return int(self.time.size)
