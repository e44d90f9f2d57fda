# gearsim/services/geometry_service.py
import dataclasses
import math
from typing import Dict, Tuple

import numpy as np
from scipy.optimize import brentq

from gearsim.errors import ConfigError
from gearsim.schemas.fault import FaultSpec, InvoluteDestruction, Pitting, ToothBreakage
from gearsim.schemas.gear import GearPairSpec, GearWheelSpec
from gearsim.schemas.geometry import (
    ContactProperties,
    PitBand,
    ProfileErrorField,
    ToothGeometry,
    ToothProfile,
    WheelGeometry,
)
from gearsim.services.logger import AppLogger

logger = AppLogger.get_logger(__name__)

# Total profile deviation F_f (um) after DIN 3962-1, rounded to the published steps.
# Rows: pitch diameter band upper limit (mm); columns: module band upper limit (mm).
DIN_DIAMETER_BANDS_MM = (50.0, 125.0, 280.0, 560.0)
DIN_MODULE_BANDS_MM = (2.0, 3.5, 6.0)
DIN_PROFILE_TOLERANCE_UM: Dict[int, Tuple[Tuple[float, ...], ...]] = {
    5: ((5.0, 6.5, 8.0), (6.0, 8.0, 9.5), (7.0, 9.0, 11.0), (8.5, 10.0, 12.0)),
    6: ((7.0, 9.0, 11.0), (8.5, 11.0, 13.0), (10.0, 13.0, 15.0), (12.0, 14.0, 17.0)),
    7: ((10.0, 13.0, 16.0), (12.0, 16.0, 19.0), (14.0, 18.0, 21.0), (17.0, 20.0, 24.0)),
    8: ((14.0, 18.0, 22.0), (17.0, 22.0, 27.0), (20.0, 25.0, 30.0), (24.0, 28.0, 34.0)),
    9: ((20.0, 26.0, 31.0), (23.0, 31.0, 38.0), (28.0, 36.0, 42.0), (33.0, 40.0, 48.0)),
}

SYSTEMATIC_SHARE = 0.8
FILLET_SAMPLES = 400
FLANK_SAMPLES = 4000


def involute(angle):
    return np.tan(angle) - angle


def undercut_limit(spec: GearWheelSpec) -> int:
    """Smallest tooth count cut without undercut (practical limit, 5/6 of the theoretical one)."""
    theoretical = 2.0 * spec.addendum_coeff / math.sin(spec.pressure_angle) ** 2
    return int(math.floor(5.0 / 6.0 * theoretical))


def base_half_angle(spec: GearWheelSpec) -> float:
    return math.pi / (2 * spec.tooth_count) + float(involute(spec.pressure_angle))


def flank_half_angle(spec: GearWheelSpec, radius):
    """Polar half-angle of the flank at the given radius; radial below the base circle."""
    r = np.asarray(radius, dtype=float)
    alpha_r = np.arccos(np.minimum(spec.base_radius / r, 1.0))
    return base_half_angle(spec) - involute(alpha_r)


def flank_coordinates(spec: GearWheelSpec, radius) -> Tuple[np.ndarray, np.ndarray]:
    """Flank points (along tooth axis, half-thickness) at the given radii."""
    r = np.asarray(radius, dtype=float)
    psi = flank_half_angle(spec, r)
    return r * np.cos(psi), r * np.sin(psi)


def load_angle(spec: GearWheelSpec, radius):
    """Angle between the line of action and the tooth-normal section at a contact radius."""
    r = np.asarray(radius, dtype=float)
    alpha_r = np.arccos(np.minimum(spec.base_radius / r, 1.0))
    return alpha_r - flank_half_angle(spec, r)


def _flank_normal(spec: GearWheelSpec, r: float) -> np.ndarray:
    psi = float(flank_half_angle(spec, r))
    rb = spec.base_radius
    dpsi = -math.sqrt(max(r * r - rb * rb, 0.0)) / (rb * r)
    tx = math.cos(psi) - r * math.sin(psi) * dpsi
    ty = math.sin(psi) + r * math.cos(psi) * dpsi
    norm = math.hypot(tx, ty)
    return np.array([-ty, tx]) / norm


def _fillet_tangency(spec: GearWheelSpec, rho: float) -> float:
    """Flank radius where a circle of radius rho touching the root circle meets the flank."""
    r_f = spec.root_radius

    def gap(r_t):
        p = np.array(flank_coordinates(spec, r_t), dtype=float)
        centre = p + rho * _flank_normal(spec, r_t)
        return float(np.hypot(*centre)) - (r_f + rho)

    return brentq(gap, r_f, spec.addendum_radius, xtol=1e-14, rtol=1e-13)


def build_tooth_profile(spec: GearWheelSpec, n_points: int = 1000, fillet_radius_coeff: float = 0.38,
                        wheel: str = "pinion") -> ToothProfile:
    """Section a healthy tooth from the root circle to the addendum circle.

    The boundary is the root fillet arc followed by the flank (radial below the base
    circle, involute above), resampled on a uniform grid along the tooth axis.
    """
    if n_points < 50:
        raise ConfigError(f"n_points must be at least 50, got {n_points}")
    limit = undercut_limit(spec)
    if spec.tooth_count < limit:
        raise ConfigError(
            f"{wheel}: {spec.tooth_count} teeth undercut at {spec.pressure_angle_deg:g} deg "
            f"(minimum {limit} teeth without profile shift)"
        )
    if spec.root_radius <= 0:
        raise ConfigError(f"{wheel}: root radius is not positive")

    r_f, r_a = spec.root_radius, spec.addendum_radius
    if float(flank_half_angle(spec, r_a)) <= 0:
        raise ConfigError(f"{wheel}: tooth is pointed below the addendum circle")

    rho = fillet_radius_coeff * spec.module
    r_t = _fillet_tangency(spec, rho)
    p_t = np.array(flank_coordinates(spec, r_t), dtype=float)
    centre = p_t + rho * _flank_normal(spec, r_t)
    root_angle = math.atan2(centre[1], centre[0])
    p_root = r_f * np.array([math.cos(root_angle), math.sin(root_angle)])

    start = math.atan2(*(p_root - centre)[::-1])
    stop = math.atan2(*(p_t - centre)[::-1])
    sweep = (stop - start + math.pi) % (2 * math.pi) - math.pi
    arc = start + sweep * np.linspace(0.0, 1.0, FILLET_SAMPLES)
    fx = centre[0] + rho * np.cos(arc)
    fy = centre[1] + rho * np.sin(arc)

    radii = np.linspace(r_t, r_a, FLANK_SAMPLES)
    vx, vy = flank_coordinates(spec, radii)

    bx = np.concatenate([fx, vx[1:]])
    by = np.concatenate([fy, vy[1:]])
    br = np.hypot(bx, by)

    # keep a strictly monotone boundary in both tooth-axis coordinate and radius
    keep = np.ones(bx.size, dtype=bool)
    keep[1:] = (np.diff(np.maximum.accumulate(bx)) > 0) & (np.diff(np.maximum.accumulate(br)) > 0)
    bx, by, br = bx[keep], by[keep], br[keep]

    root_offset = float(p_root[0])
    x_boundary = bx - root_offset
    x_grid = np.linspace(0.0, x_boundary[-1], n_points)
    y_grid = np.interp(x_grid, x_boundary, by)
    r_grid = np.interp(x_grid, x_boundary, br)

    profile = ToothProfile.from_sections(
        wheel=wheel,
        spec=spec,
        x_coords=x_grid,
        half_thickness=y_grid,
        width=spec.face_width,
        flank_radius=r_grid,
        root_offset=root_offset,
        root_half_angle=root_angle,
        involute_start_radius=max(spec.base_radius, r_t),
        tip_radius=r_a,
    )
    logger.debug(
        f"{wheel} profile: {n_points} sections, fillet meets flank at r={r_t * 1e3:.4f} mm, "
        f"root half-angle {math.degrees(root_angle):.3f} deg"
    )
    return profile


def contact_properties(pinion: GearWheelSpec, gear: GearWheelSpec) -> ContactProperties:
    """Contact ratio and the start of contact along the line of action."""
    if abs(pinion.module - gear.module) > 1e-15:
        raise ConfigError("pinion and gear modules differ")
    if abs(pinion.pressure_angle - gear.pressure_angle) > 1e-15:
        raise ConfigError("pinion and gear pressure angles differ")
    alpha = pinion.pressure_angle
    if math.cos(alpha) < 1e-9:
        raise ConfigError(f"degenerate line of action at pressure angle {pinion.pressure_angle_deg:g} deg")

    center = pinion.pitch_radius + gear.pitch_radius
    tangent_span = center * math.sin(alpha)
    reach_p = math.sqrt(pinion.addendum_radius ** 2 - pinion.base_radius ** 2)
    reach_g = math.sqrt(gear.addendum_radius ** 2 - gear.base_radius ** 2)
    start = tangent_span - reach_g
    path = reach_p + reach_g - tangent_span
    base_pitch = 2 * math.pi * pinion.base_radius / pinion.tooth_count
    ratio = path / base_pitch

    if ratio <= 1.0:
        raise ConfigError(f"contact ratio {ratio:.4f} <= 1, transmission would lose contact")
    if start < 0 or reach_p > tangent_span:
        raise ConfigError("contact extends past an interference point of the line of action")

    return ContactProperties(
        contact_ratio=ratio,
        initial_contact_point=start,
        mesh_period_rad=2 * math.pi / pinion.tooth_count,
        base_pitch=base_pitch,
        line_of_action_length=tangent_span,
        path_of_contact=path,
        center_distance=center,
    )


def profile_tolerance_um(spec: GearWheelSpec, din_grade: int) -> float:
    if din_grade not in DIN_PROFILE_TOLERANCE_UM:
        raise ConfigError(f"DIN grade {din_grade} not supported (5..9)")
    diameter_mm = 2 * spec.pitch_radius * 1e3
    d_band = int(np.searchsorted(DIN_DIAMETER_BANDS_MM, diameter_mm, side="left"))
    m_band = int(np.searchsorted(DIN_MODULE_BANDS_MM, spec.module_mm, side="left"))
    if d_band >= len(DIN_DIAMETER_BANDS_MM) or m_band >= len(DIN_MODULE_BANDS_MM):
        raise ConfigError(
            f"no DIN tolerance for d={diameter_mm:.1f} mm, m={spec.module_mm:g} mm "
            f"(table covers d <= {DIN_DIAMETER_BANDS_MM[-1]:g} mm, m <= {DIN_MODULE_BANDS_MM[-1]:g} mm)"
        )
    return DIN_PROFILE_TOLERANCE_UM[din_grade][d_band][m_band]


def _wheel_deviations(rng: np.random.Generator, teeth: int, n_points: int, tolerance_um: float) -> np.ndarray:
    s = np.linspace(0.0, 1.0, n_points)
    # form error shared by every tooth of the wheel
    systematic = np.sin(np.pi * s + rng.uniform(0, 2 * np.pi)) + 0.3 * np.sin(2 * np.pi * s + rng.uniform(0, 2 * np.pi))
    systematic /= np.max(np.abs(systematic))

    phases = rng.uniform(0, 2 * np.pi, size=(teeth, 1))
    harmonic = np.sin(4 * np.pi * s[None, :] + phases)
    white = rng.standard_normal((teeth, n_points))
    white /= np.max(np.abs(white))
    random_part = 0.6 * harmonic + 0.4 * white

    raw = SYSTEMATIC_SHARE * systematic[None, :] + (1 - SYSTEMATIC_SHARE) * random_part
    peak = rng.uniform(0.6, 1.0) * tolerance_um / 2
    return raw * (peak / np.max(np.abs(raw)))


def generate_profile_errors(pair: GearPairSpec, din_grade: int, seed: int, n_points: int = 64) -> ProfileErrorField:
    """Seeded flank deviations for every tooth of both wheels, bounded by the DIN grade.

    Random draws do not depend on the grade, so changing the grade rescales the same field.
    """
    if din_grade not in DIN_PROFILE_TOLERANCE_UM:
        raise ConfigError(f"DIN grade {din_grade} not supported (5..9)")
    if n_points < 2:
        raise ConfigError("profile errors need at least two flank points")
    fields, tolerances = {}, {}
    for idx, name in enumerate(("pinion", "gear")):
        spec = pair.wheel(name)
        tolerances[name] = profile_tolerance_um(spec, din_grade)
        rng = np.random.default_rng([seed, idx])
        fields[name] = _wheel_deviations(rng, spec.tooth_count, n_points, tolerances[name])
    return ProfileErrorField(
        pinion=fields["pinion"], gear=fields["gear"], din_grade=din_grade, seed=seed, tolerance_um=tolerances
    )


def zero_profile_errors(pair: GearPairSpec, n_points: int = 64) -> ProfileErrorField:
    return ProfileErrorField(
        pinion=np.zeros((pair.pinion.tooth_count, n_points)),
        gear=np.zeros((pair.gear.tooth_count, n_points)),
        din_grade=0,
        seed=0,
    )


def truncate_profile(profile: ToothProfile, cut_radius: float) -> ToothProfile:
    """Tooth with everything above cut_radius removed."""
    x_cut = float(np.interp(cut_radius, profile.flank_radius, profile.x_coords))
    keep = profile.x_coords < x_cut
    x = np.append(profile.x_coords[keep], x_cut)
    y = np.append(profile.half_thickness[keep], np.interp(x_cut, profile.x_coords, profile.half_thickness))
    w = np.append(profile.width[keep], np.interp(x_cut, profile.x_coords, profile.width))
    r = np.append(profile.flank_radius[keep], cut_radius)
    return ToothProfile.from_sections(
        wheel=profile.wheel,
        spec=profile.spec,
        x_coords=x,
        half_thickness=y,
        width=w,
        flank_radius=r,
        root_offset=profile.root_offset,
        root_half_angle=profile.root_half_angle,
        involute_start_radius=profile.involute_start_radius,
        tip_radius=cut_radius,
        parent=profile.parent or profile,
    )


def _pitted_profile(profile: ToothProfile, fault: Pitting) -> Tuple[ToothProfile, PitBand]:
    r0, r1 = profile.involute_start_radius, profile.tip_radius
    centre = r0 + fault.flank_position * (r1 - r0)
    half_height = 0.5 * fault.radial_extent_fraction * (r1 - r0)
    inner, outer = max(r0, centre - half_height), min(r1, centre + half_height)

    band = (profile.flank_radius >= inner) & (profile.flank_radius <= outer)
    depth = fault.pit_depth_mm * 1e-3
    thickness = 2 * profile.half_thickness
    # material lost from the pitted share of the face, expressed as an equivalent width
    lost = fault.axial_extent_fraction * np.minimum(1.0, np.divide(depth, thickness, out=np.ones_like(thickness),
                                                                   where=thickness > 0))
    width = np.where(band, profile.width * (1 - lost), profile.width)
    pitted = dataclasses.replace(
        profile,
        width=width,
        area=2 * profile.half_thickness * width,
        second_moment=thickness ** 3 * width / 12,
    )
    return pitted, PitBand(inner_radius=inner, outer_radius=outer,
                           contact_width_factor=1 - fault.axial_extent_fraction)


def apply_fault(profile: ToothProfile, errors: ProfileErrorField, fault: FaultSpec) -> WheelGeometry:
    """Per-tooth geometry of one wheel; teeth the fault does not name share the healthy profile."""
    deviations = errors.for_wheel(profile.wheel)
    teeth_count = profile.spec.tooth_count
    if deviations.shape[0] != teeth_count:
        raise ConfigError(
            f"profile errors hold {deviations.shape[0]} teeth for {profile.wheel}, expected {teeth_count}"
        )
    teeth = [
        ToothGeometry(profile=profile, deviation_um=deviations[i], tip_limit_radius=profile.tip_radius)
        for i in range(teeth_count)
    ]
    indices = fault.tooth_indices_for(profile.wheel)
    bad = [i for i in indices if i >= teeth_count]
    if bad:
        raise ConfigError(f"fault tooth indices {bad} out of range for {profile.wheel} with {teeth_count} teeth")

    if isinstance(fault, ToothBreakage) and indices:
        r0 = profile.involute_start_radius
        cut = r0 + (1 - fault.tip_loss_fraction) * (profile.tip_radius - r0)
        if cut - r0 <= 1e-6 * profile.spec.module:
            raise ConfigError(f"tip loss {fault.tip_loss_fraction:g} leaves no active flank")
        truncated = truncate_profile(profile, cut)
        for i in indices:
            teeth[i] = ToothGeometry(profile=truncated, deviation_um=deviations[i], tip_limit_radius=cut)
    elif isinstance(fault, Pitting) and indices:
        pitted, band = _pitted_profile(profile, fault)
        for i in indices:
            teeth[i] = ToothGeometry(profile=pitted, deviation_um=deviations[i],
                                     tip_limit_radius=profile.tip_radius, pit=band)
    elif isinstance(fault, InvoluteDestruction) and indices:
        s = np.linspace(0.0, 1.0, deviations.shape[1])
        wear = fault.deviation_amplitude_um * np.abs(2 * s - 1)
        for i in indices:
            teeth[i] = ToothGeometry(profile=profile, deviation_um=deviations[i] - wear,
                                     tip_limit_radius=profile.tip_radius)

    if indices:
        logger.info(f"Applied {fault.label} to {profile.wheel} teeth {indices}")
    return WheelGeometry(
        wheel=profile.wheel,
        spec=profile.spec,
        healthy_profile=profile,
        teeth=tuple(teeth),
        faulted_teeth=tuple(indices),
    )


def build_wheel_geometries(pair: GearPairSpec, errors: ProfileErrorField, fault: FaultSpec, n_points: int = 1000,
                           fillet_radius_coeff: float = 0.38) -> Dict[str, WheelGeometry]:
    wheels = {}
    for name in ("pinion", "gear"):
        profile = build_tooth_profile(pair.wheel(name), n_points, fillet_radius_coeff, wheel=name)
        wheels[name] = apply_fault(profile, errors, fault)
    return wheels
