# gearsim/services/assembly_service.py
import math
import time
from typing import Optional

import numpy as np

from gearsim.errors import ConfigError
from gearsim.schemas.dynamics import DofLayout, DynamicModel, GeomCoefficients, SystemMatrices
from gearsim.schemas.gear import GearPairSpec, GearWheelSpec, OperatingConditions
from gearsim.schemas.run_config import RunConfig, StructuralParameters
from gearsim.schemas.stiffness import GmsCurve
from gearsim.services.logger import AppLogger

logger = AppLogger.get_logger(__name__)

LAYOUT = DofLayout()


def wheel_mass(spec: GearWheelSpec) -> float:
    """Solid disc at the pitch radius with the hub bore removed."""
    return spec.material.density * math.pi * (spec.pitch_radius ** 2 - spec.hub_bore_radius ** 2) * spec.face_width


def wheel_inertia(spec: GearWheelSpec) -> float:
    return 0.5 * wheel_mass(spec) * (spec.pitch_radius ** 2 + spec.hub_bore_radius ** 2)


def mesh_geometry_coefficients(pair: GearPairSpec, structure: StructuralParameters,
                               layout: DofLayout = LAYOUT) -> GeomCoefficients:
    """Line-of-action projection of the mesh deflection and its face-width dependence.

    At face-width position z the pinion and gear sections lag their shaft ends by the
    share z / shaft length of the shaft wind-up, which enters the deflection through g1.
    """
    alpha = pair.pinion.pressure_angle
    rb1, rb2 = pair.pinion.base_radius, pair.gear.base_radius
    lp, lg = structure.pinion_shaft_length, structure.gear_shaft_length
    idx = layout.index

    g0 = np.zeros(layout.size)
    g0[idx("x_p")] = math.sin(alpha)
    g0[idx("y_p")] = math.cos(alpha)
    g0[idx("x_g")] = -math.sin(alpha)
    g0[idx("y_g")] = -math.cos(alpha)
    g0[idx("theta_p")] = rb1
    g0[idx("theta_g")] = -rb2

    g1 = np.zeros(layout.size)
    g1[idx("theta_p")] = rb1 / lp
    g1[idx("theta_m")] = -rb1 / lp
    g1[idx("theta_g")] = -rb2 / lg
    g1[idx("theta_l")] = rb2 / lg

    width = min(pair.pinion.face_width, pair.gear.face_width)
    mixed = np.outer(g0, g1)
    return GeomCoefficients(
        line_of_action=g0,
        twist=g1,
        geom_z_indep=np.outer(g0, g0),
        geom_z_dep=np.stack([mixed + mixed.T, np.outer(g1, g1)]),
        # means of z and z^2 over [-W/2, W/2]
        expectation_matrix=np.array([0.0, width ** 2 / 12.0]),
        face_width=width,
    )


def midpoint_z_grid(face_width: float, m_points: int) -> np.ndarray:
    if m_points < 1:
        raise ConfigError("z grid needs at least one point")
    return (np.arange(m_points) + 0.5) / m_points * face_width - face_width / 2


def assemble_mass(pair: GearPairSpec, structure: StructuralParameters, layout: DofLayout = LAYOUT) -> np.ndarray:
    values = {
        "pinion_mass": structure.pinion_mass if structure.pinion_mass is not None else wheel_mass(pair.pinion),
        "pinion_inertia": structure.pinion_inertia if structure.pinion_inertia is not None else wheel_inertia(pair.pinion),
        "gear_mass": structure.gear_mass if structure.gear_mass is not None else wheel_mass(pair.gear),
        "gear_inertia": structure.gear_inertia if structure.gear_inertia is not None else wheel_inertia(pair.gear),
    }
    bad = [k for k, v in values.items() if not v > 0]
    if bad:
        raise ConfigError(f"non-positive inertia: {', '.join(bad)}")

    diag = np.zeros(layout.size)
    for dof in ("x_p", "y_p", "z_p"):
        diag[layout.index(dof)] = values["pinion_mass"]
    for dof in ("x_g", "y_g", "z_g"):
        diag[layout.index(dof)] = values["gear_mass"]
    for dof in ("x_c", "y_c", "z_c"):
        diag[layout.index(dof)] = structure.casing_mass
    diag[layout.index("theta_p")] = values["pinion_inertia"]
    diag[layout.index("theta_g")] = values["gear_inertia"]
    diag[layout.index("theta_m")] = structure.motor_inertia
    diag[layout.index("theta_l")] = structure.load_inertia
    return np.diag(diag)


def _spring(k: np.ndarray, i: int, j: Optional[int], stiffness: float) -> None:
    k[i, i] += stiffness
    if j is not None:
        k[j, j] += stiffness
        k[i, j] -= stiffness
        k[j, i] -= stiffness


def assemble_constant_stiffness(structure: StructuralParameters, layout: DofLayout = LAYOUT) -> np.ndarray:
    """Bearings to the casing, casing mounts to ground, and the two torsional shafts."""
    k = np.zeros((layout.size, layout.size))
    idx = layout.index
    for wheel in ("p", "g"):
        _spring(k, idx(f"x_{wheel}"), idx("x_c"), structure.bearing_radial_stiffness)
        _spring(k, idx(f"y_{wheel}"), idx("y_c"), structure.bearing_radial_stiffness)
        _spring(k, idx(f"z_{wheel}"), idx("z_c"), structure.bearing_axial_stiffness)
    for dof in ("x_c", "y_c", "z_c"):
        _spring(k, idx(dof), None, structure.casing_mount_stiffness)
    _spring(k, idx("theta_m"), idx("theta_p"), structure.pinion_shaft_torsional_stiffness)
    _spring(k, idx("theta_g"), idx("theta_l"), structure.gear_shaft_torsional_stiffness)
    return k


def assemble_damping(mass: np.ndarray, mean_stiffness: np.ndarray, rayleigh_a: float, rayleigh_b: float) -> np.ndarray:
    if rayleigh_a < 0 or rayleigh_b < 0:
        raise ConfigError("Rayleigh coefficients must be non-negative")
    return rayleigh_a * mass + rayleigh_b * mean_stiffness


def assemble_stiffness_cycle_naive(gms: np.ndarray, k_const: np.ndarray, coeffs: GeomCoefficients,
                                   z_grid: np.ndarray) -> np.ndarray:
    """K(cyc_i) = K_const + (1/M) sum_j geom(z_j) gms(cyc_i), looping over both grids."""
    gms = np.asarray(gms, dtype=float)
    z_grid = np.asarray(z_grid, dtype=float)
    out = np.empty((gms.size,) + k_const.shape)
    for i, g in enumerate(gms):
        acc = np.zeros_like(k_const)
        for z in z_grid:
            acc += coeffs.at(z) * g
        out[i] = k_const + acc / z_grid.size
    return out


def assemble_stiffness_cycle_fast(gms: np.ndarray, k_const: np.ndarray, coeffs: GeomCoefficients) -> np.ndarray:
    """K(cyc) = K_const + [geom_zdep . E(z) + geom_zindep] gms(cyc), no z loop."""
    gms = np.asarray(gms, dtype=float)
    return k_const[None, :, :] + coeffs.effective[None, :, :] * gms[:, None, None]


def static_forces(pair: GearPairSpec, conditions: OperatingConditions, mass: np.ndarray,
                  layout: DofLayout = LAYOUT) -> np.ndarray:
    """Motor and load torques plus gravity on the vertical DOFs."""
    f = np.zeros(layout.size)
    f[layout.index("theta_m")] = conditions.output_load_nm * pair.pinion.tooth_count / pair.gear.tooth_count
    f[layout.index("theta_l")] = -conditions.output_load_nm
    for dof in ("y_p", "y_g", "y_c"):
        i = layout.index(dof)
        f[i] -= mass[i, i] * conditions.gravity_ms2
    return f


def assemble_external_forces(pair: GearPairSpec, conditions: OperatingConditions, gms: np.ndarray,
                             static_transmission_error: np.ndarray, coeffs: GeomCoefficients,
                             mass: np.ndarray, layout: DofLayout = LAYOUT) -> np.ndarray:
    """F_ex at every cycle point; the mesh-error load uses the face-width mean projection."""
    base = static_forces(pair, conditions, mass, layout)
    error_load = np.asarray(gms, dtype=float) * np.asarray(static_transmission_error, dtype=float)
    return base[None, :] - error_load[:, None] * coeffs.effective_direction[None, :]


def build_dynamic_model(config: RunConfig, gms: GmsCurve, layout: DofLayout = LAYOUT) -> DynamicModel:
    """Assemble every matrix of the equations of motion for one run."""
    started = time.perf_counter()
    pair = config.pair
    structure = config.structure
    coeffs = mesh_geometry_coefficients(pair, structure, layout)
    mass = assemble_mass(pair, structure, layout)
    k_const = assemble_constant_stiffness(structure, layout)

    ref_gms = gms.mesh_cycle_mean()
    n_cyc = gms.points_per_cycle
    ref_ste = gms.static_transmission_error.reshape(gms.n_mesh_cycles, n_cyc).mean(axis=0)
    k_cycle = assemble_stiffness_cycle_fast(ref_gms, k_const, coeffs)
    damping = assemble_damping(mass, k_cycle.mean(axis=0), structure.rayleigh_a, structure.rayleigh_b)
    f_ex = assemble_external_forces(pair, config.conditions, ref_gms, ref_ste, coeffs, mass, layout)

    matrices = SystemMatrices(mass=mass, damping=damping, k_const=k_const, k_cycle=k_cycle, f_ex=f_ex)
    model = DynamicModel(
        layout=layout,
        matrices=matrices,
        mesh_matrix=coeffs.effective,
        error_direction=coeffs.effective_direction,
        static_force=static_forces(pair, config.conditions, mass, layout),
        gms_grid=gms.stiffness,
        error_load_grid=gms.stiffness * gms.static_transmission_error,
        grid_cycles=gms.n_mesh_cycles,
        points_per_cycle=n_cyc,
        mesh_frequency=config.conditions.mesh_frequency(pair.pinion.tooth_count),
        duration_s=config.conditions.duration_s,
        sampling_rate_hz=config.conditions.sampling_rate_hz,
        input_speed_hz=config.conditions.input_speed_hz,
        output_speed_hz=config.conditions.output_speed_hz(pair),
        recorded_dofs=("theta_p", "theta_g", "x_c", "y_c", "z_c"),
    )
    logger.info(f"Assembled {layout.size}-DOF model over {n_cyc} cycle points ({time.perf_counter() - started:.2f}s)")
    return model
