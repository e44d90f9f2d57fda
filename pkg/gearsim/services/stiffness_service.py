# gearsim/services/stiffness_service.py
import math
import time
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np
from scipy.integrate import cumulative_trapezoid

from gearsim.errors import ConfigError, ContactLossError, SingularSectionError
from gearsim.schemas.gear import GearPairSpec, GearWheelSpec
from gearsim.schemas.geometry import ContactProperties, ProfileErrorField, ToothProfile, WheelGeometry
from gearsim.schemas.stiffness import ContactState, GmsCurve, LoadDecomposition, StrainEnergyBreakdown
from gearsim.schemas.fault import FaultSpec
from gearsim.services.geometry_service import build_wheel_geometries, contact_properties, load_angle
from gearsim.services.logger import AppLogger

logger = AppLogger.get_logger(__name__)

SHEAR_CORRECTION = 1.2

# Gear-body polynomial coefficients (Sainsot, Velex & Duverger 2004), rows L, M, P, Q;
# columns multiply 1/theta_f^2, h^2, h/theta_f, 1/theta_f, h, 1.
SAINSOT_COEFFICIENTS = np.array([
    [-5.574e-5, -1.9986e-3, -2.3015e-4, 4.7702e-3, 0.0271, 6.8045],
    [60.111e-5, 28.100e-3, -83.431e-4, -9.9256e-3, 0.1624, 0.9086],
    [-50.952e-5, 185.50e-3, 0.0538e-4, 53.300e-3, 0.2895, 0.9236],
    [-6.2042e-5, 9.0889e-3, -4.0964e-4, 7.8297e-3, -0.1472, 0.6904],
])


def _first_singular(values: np.ndarray) -> Optional[int]:
    bad = np.flatnonzero(~(values > 0))
    return int(bad[0]) if bad.size else None


def _check_sections(values: np.ndarray, load: LoadDecomposition, what: str) -> Optional[int]:
    first = _first_singular(values)
    if first is not None and first <= load.application_point_index:
        raise SingularSectionError(
            f"{what} vanishes at section {first}, at or below the load point {load.application_point_index}",
            index=first,
        )
    return first


def _cumulative_inverse(values: np.ndarray, x: np.ndarray, stop: Optional[int], power: int = 0) -> np.ndarray:
    """Running integral of x**power / values from the root; inf from the first singular section on."""
    out = np.full(x.size, np.inf)
    stop = x.size if stop is None else stop
    if stop > 0:
        out[:stop] = cumulative_trapezoid(x[:stop] ** power / values[:stop], x[:stop], initial=0)
    return out


def _bending_basis(profile: ToothProfile, stop: Optional[int]) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Coefficients of F_s^2, F_a F_s and F_a^2 in U_b at every section."""
    x, y, inertia = profile.x_coords, profile.half_thickness, profile.second_moment
    two_e = 2 * profile.spec.material.young_modulus
    j0 = _cumulative_inverse(inertia, x, stop, 0)
    j1 = _cumulative_inverse(inertia, x, stop, 1)
    j2 = _cumulative_inverse(inertia, x, stop, 2)
    with np.errstate(invalid="ignore"):
        b_ss = (x * x * j0 - 2 * x * j1 + j2) / two_e
        b_as = 2 * y * (j1 - x * j0) / two_e
        b_aa = y * y * j0 / two_e
    if stop is not None:
        for arr in (b_ss, b_as, b_aa):
            arr[stop:] = np.inf
    return b_ss, b_as, b_aa


def bending_energy_naive(profile: ToothProfile, load: LoadDecomposition) -> np.ndarray:
    """U_b for the load applied at each section, integrating section by section."""
    x, y, inertia = profile.x_coords, profile.half_thickness, profile.second_moment
    stop = _check_sections(inertia, load, "second moment of area")
    two_e = 2 * profile.spec.material.young_modulus
    out = np.full(x.size, np.inf)
    for i in range(x.size if stop is None else stop):
        xs = x[: i + 1]
        moment = load.shear_force * (x[i] - xs) - load.axial_force * y[i]
        out[i] = np.trapezoid(moment ** 2 / (two_e * inertia[: i + 1]), xs)
    return out


def bending_energy_fast(profile: ToothProfile, load: LoadDecomposition) -> np.ndarray:
    """Same result as bending_energy_naive from three running integrals."""
    stop = _check_sections(profile.second_moment, load, "second moment of area")
    b_ss, b_as, b_aa = _bending_basis(profile, stop)
    fa, fs = load.axial_force, load.shear_force
    with np.errstate(invalid="ignore"):
        out = fs * fs * b_ss + fa * fs * b_as + fa * fa * b_aa
    if stop is not None:
        out[stop:] = np.inf
    return out


def axial_shear_energies(profile: ToothProfile, load: LoadDecomposition) -> Tuple[np.ndarray, np.ndarray]:
    stop = _check_sections(profile.area, load, "section area")
    mat = profile.spec.material
    running = _cumulative_inverse(profile.area, profile.x_coords, stop)
    axial = load.axial_force ** 2 / (2 * mat.young_modulus) * running
    shear = SHEAR_CORRECTION * load.shear_force ** 2 / (2 * mat.shear_modulus) * running
    if stop is not None:
        axial[stop:] = np.inf
        shear[stop:] = np.inf
    return axial, shear


def axial_shear_energies_naive(profile: ToothProfile, load: LoadDecomposition) -> Tuple[np.ndarray, np.ndarray]:
    x, area = profile.x_coords, profile.area
    stop = _check_sections(area, load, "section area")
    mat = profile.spec.material
    axial = np.full(x.size, np.inf)
    shear = np.full(x.size, np.inf)
    for i in range(x.size if stop is None else stop):
        xs, a = x[: i + 1], area[: i + 1]
        axial[i] = np.trapezoid(load.axial_force ** 2 / (2 * mat.young_modulus * a), xs)
        shear[i] = np.trapezoid(SHEAR_CORRECTION * load.shear_force ** 2 / (2 * mat.shear_modulus * a), xs)
    return axial, shear


def hertz_compliance(pinion: GearWheelSpec, gear: GearWheelSpec, width_factor: float = 1.0) -> float:
    """Contact compliance, constant along the line of action."""
    width = min(pinion.face_width, gear.face_width) * width_factor
    m1, m2 = pinion.material, gear.material
    effective = 0.5 * ((1 - m1.poisson_ratio ** 2) / m1.young_modulus + (1 - m2.poisson_ratio ** 2) / m2.young_modulus)
    return 4 * effective / (math.pi * width)


def sainsot_coefficients(hub_ratio: float, root_half_angle: float) -> np.ndarray:
    h, t = hub_ratio, root_half_angle
    terms = np.array([1 / t ** 2, h ** 2, h / t, 1 / t, h, 1.0])
    return SAINSOT_COEFFICIENTS @ terms


def foundation_compliance(profile: ToothProfile, radius):
    """Gear-body compliance for a unit load at the given flank radius."""
    spec = profile.spec
    r = np.asarray(radius, dtype=float)
    alpha1 = load_angle(spec, r)
    x_c = np.interp(r, profile.flank_radius, profile.x_coords)
    y_c = np.interp(r, profile.flank_radius, profile.half_thickness)
    r_f = spec.root_radius
    u = profile.root_offset + x_c - y_c * np.tan(alpha1) - r_f
    s_f = 2 * r_f * profile.root_half_angle
    coef_l, coef_m, coef_p, coef_q = sainsot_coefficients(r_f / spec.hub_bore_radius, profile.root_half_angle)
    ratio = u / s_f
    return np.cos(alpha1) ** 2 / (spec.material.young_modulus * spec.face_width) * (
        coef_l * ratio ** 2 + coef_m * ratio + coef_p * (1 + coef_q * np.tan(alpha1) ** 2)
    )


def load_at_radius(profile: ToothProfile, radius: float) -> LoadDecomposition:
    alpha1 = float(load_angle(profile.spec, radius))
    index = int(round(float(np.interp(radius, profile.flank_radius, np.arange(profile.n_points)))))
    return LoadDecomposition(axial_force=math.sin(alpha1), shear_force=math.cos(alpha1), application_point_index=index)


def tooth_strain_energies(profile: ToothProfile, load: LoadDecomposition, mate: GearWheelSpec) -> StrainEnergyBreakdown:
    bending = bending_energy_fast(profile, load)
    axial, shear = axial_shear_energies(profile, load)
    radius = float(profile.flank_radius[load.application_point_index])
    return StrainEnergyBreakdown(
        bending=bending,
        axial=axial,
        shear=shear,
        hertz_compliance=hertz_compliance(profile.spec, mate),
        foundation_compliance=float(foundation_compliance(profile, radius)),
    )


def series_stiffness(compliances: Iterable[float]) -> float:
    return 1.0 / float(sum(compliances))


class ToothCompliance:
    """Beam and gear-body compliance of one sectioned tooth, evaluated at contact radii."""

    def __init__(self, profile: ToothProfile):
        # beam integrals run root to load point, so a truncated tooth uses its parent's sections
        source = profile.parent or profile
        self.profile = source
        mat = source.spec.material
        self._index = np.arange(source.n_points, dtype=float)
        stop_i = _first_singular(source.second_moment)
        stop_a = _first_singular(source.area)
        stops = [s for s in (stop_i, stop_a) if s is not None]
        self._stop = min(stops) if stops else None

        b_ss, b_as, b_aa = _bending_basis(source, stop_i)
        running = _cumulative_inverse(source.area, source.x_coords, stop_a)
        with np.errstate(invalid="ignore"):
            self._ss = b_ss + SHEAR_CORRECTION * running / (2 * mat.shear_modulus)
            self._aa = b_aa + running / (2 * mat.young_modulus)
        self._as = b_as

    def position(self, radius) -> np.ndarray:
        return np.interp(radius, self.profile.flank_radius, self._index)

    def beam(self, radius) -> np.ndarray:
        r = np.asarray(radius, dtype=float)
        pos = self.position(r)
        if self._stop is not None and np.any(pos > self._stop - 1):
            raise SingularSectionError(
                f"{self.profile.wheel} tooth has a vanishing section at {self._stop} below the contact point",
                index=self._stop,
            )
        alpha1 = load_angle(self.profile.spec, r)
        fa, fs = np.sin(alpha1), np.cos(alpha1)
        # compliance = 2 U for a unit force
        return 2 * (
            fs * fs * np.interp(pos, self._index, self._ss)
            + fa * fs * np.interp(pos, self._index, self._as)
            + fa * fa * np.interp(pos, self._index, self._aa)
        )

    def foundation(self, radius) -> np.ndarray:
        return foundation_compliance(self.profile, radius)


def pair_stiffness(profile_p: ToothProfile, profile_g: ToothProfile, contact_state: ContactState,
                   compliance_p: Optional[ToothCompliance] = None,
                   compliance_g: Optional[ToothCompliance] = None) -> Optional[float]:
    """Series stiffness of one tooth pair, or None when either contact point is off its flank."""
    rp, rg = contact_state.pinion_radius, contact_state.gear_radius
    if rp > min(contact_state.pinion_tip_limit, profile_p.tip_radius) or rg > min(contact_state.gear_tip_limit,
                                                                                  profile_g.tip_radius):
        return None
    cp = compliance_p or ToothCompliance(profile_p)
    cg = compliance_g or ToothCompliance(profile_g)
    terms = [
        float(cp.beam(rp)),
        float(cg.beam(rg)),
        hertz_compliance(profile_p.spec, profile_g.spec, contact_state.contact_width_factor),
        float(cp.foundation(rp)),
        float(cg.foundation(rg)),
    ]
    return series_stiffness(terms)


class MeshStiffnessModel:
    """Evaluates every tooth pair in contact at arbitrary pinion positions (in mesh cycles)."""

    def __init__(self, contact: ContactProperties, pinion: WheelGeometry, gear: WheelGeometry):
        self.contact = contact
        self.pinion = pinion
        self.gear = gear
        self.n_pairs = int(math.ceil(contact.contact_ratio))
        self._compliance: Dict[int, ToothCompliance] = {}
        self._hertz = hertz_compliance(pinion.spec, gear.spec)
        self._warned_low_contact = False

    def _compliance_for(self, profile: ToothProfile) -> ToothCompliance:
        key = id(profile)
        if key not in self._compliance:
            self._compliance[key] = ToothCompliance(profile)
        return self._compliance[key]

    @staticmethod
    def _flank_deviation(wheel: WheelGeometry, teeth: np.ndarray, fraction: np.ndarray) -> np.ndarray:
        dev = np.stack([t.deviation_um for t in wheel.teeth])
        n = dev.shape[1]
        t = np.clip(fraction, 0.0, 1.0) * (n - 1)
        j = np.minimum(np.floor(t).astype(int), n - 2)
        w = t - j
        return (dev[teeth, j] * (1 - w) + dev[teeth, j + 1] * w) * 1e-6

    def _wheel_terms(self, wheel: WheelGeometry, teeth: np.ndarray, radius: np.ndarray,
                     active: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Beam + foundation compliance and Hertz width factor per sample; active is narrowed in place."""
        compliance = np.full(radius.size, np.nan)
        width = np.ones(radius.size)
        tip = np.array([t.tip_limit_radius for t in wheel.teeth])
        active &= radius <= tip[teeth] * (1 + 1e-12)

        groups: Dict[int, List[int]] = {}
        for i, tooth in enumerate(wheel.teeth):
            groups.setdefault(id(tooth.profile), []).append(i)
        for members in groups.values():
            sel = active & np.isin(teeth, members)
            if not np.any(sel):
                continue
            comp = self._compliance_for(wheel.teeth[members[0]].profile)
            compliance[sel] = comp.beam(radius[sel]) + comp.foundation(radius[sel])
        for i, tooth in enumerate(wheel.teeth):
            if tooth.pit is None:
                continue
            sel = active & (teeth == i) & (radius >= tooth.pit.inner_radius) & (radius <= tooth.pit.outer_radius)
            width[sel] = tooth.pit.contact_width_factor

        if not self._warned_low_contact:
            start = wheel.healthy_profile.involute_start_radius
            if np.any(radius[active] < start * (1 - 1e-9)):
                logger.warning(f"{wheel.wheel} contact reaches below the involute start radius {start * 1e3:.4f} mm")
                self._warned_low_contact = True
        return compliance, width, active

    def evaluate(self, cycles: np.ndarray):
        """Total stiffness, per-pair stiffness, engaged teeth and static transmission error."""
        c = np.asarray(cycles, dtype=float)
        mesh = np.floor(c).astype(np.int64)
        frac = c - mesh
        con = self.contact
        rb1, rb2 = self.pinion.spec.base_radius, self.gear.spec.base_radius
        z1, z2 = self.pinion.tooth_count, self.gear.tooth_count

        per_pair = np.full((c.size, self.n_pairs), np.nan)
        tp_all = np.full((c.size, self.n_pairs), -1, dtype=np.int64)
        tg_all = np.full((c.size, self.n_pairs), -1, dtype=np.int64)
        weighted_error = np.zeros(c.size)
        for k in range(self.n_pairs):
            s = con.initial_contact_point + con.base_pitch * (frac + k)
            active = s <= con.final_contact_point * (1 + 1e-12)
            r1 = np.hypot(rb1, s)
            r2 = np.hypot(rb2, con.line_of_action_length - s)
            tp = np.mod(mesh - k, z1)
            tg = np.mod(mesh - k, z2)

            comp_p, width_p, active = self._wheel_terms(self.pinion, tp, r1, active)
            comp_g, width_g, active = self._wheel_terms(self.gear, tg, r2, active)
            hertz = self._hertz / np.minimum(width_p, width_g)
            stiffness = np.where(active, 1.0 / (comp_p + comp_g + hertz), np.nan)

            roll = (s - con.initial_contact_point) / con.path_of_contact
            error = self._flank_deviation(self.pinion, tp, roll) + self._flank_deviation(self.gear, tg, 1 - roll)
            per_pair[:, k] = stiffness
            tp_all[:, k] = np.where(active, tp, -1)
            tg_all[:, k] = np.where(active, tg, -1)
            weighted_error += np.where(active, stiffness * error, 0.0)

        total = np.nansum(per_pair, axis=1)
        lost = np.flatnonzero(total <= 0)
        if lost.size:
            where = c[lost[0]] * con.mesh_period_rad
            raise ContactLossError(
                f"no tooth pair in contact at pinion angle {where:.6f} rad ({lost.size} of {c.size} samples)"
            )
        return total, per_pair, tp_all, tg_all, weighted_error / total


def gms_from_geometry(contact: ContactProperties, pinion: WheelGeometry, gear: WheelGeometry, n_cyc: int = 512,
                      n_mesh_cycles: int = 1) -> GmsCurve:
    if n_cyc < 64:
        raise ConfigError(f"n_cyc must be at least 64, got {n_cyc}")
    model = MeshStiffnessModel(contact, pinion, gear)
    cycles = np.arange(n_mesh_cycles * n_cyc, dtype=float) / n_cyc
    total, per_pair, tp, tg, ste = model.evaluate(cycles)
    return GmsCurve(
        cycle_grid=cycles * contact.mesh_period_rad,
        stiffness=total,
        pair_stiffness=per_pair,
        pinion_teeth=tp,
        gear_teeth=tg,
        static_transmission_error=ste,
        points_per_cycle=n_cyc,
        n_mesh_cycles=n_mesh_cycles,
        mesh_period_rad=contact.mesh_period_rad,
    )


def gms_over_cycle(pair: GearPairSpec, errors: ProfileErrorField, fault: FaultSpec, n_cyc: int = 512,
                   n_points: int = 1000, fillet_radius_coeff: float = 0.38,
                   n_mesh_cycles: Optional[int] = None) -> GmsCurve:
    """Mesh stiffness of the pair over its repeating period.

    One mesh cycle when every tooth is identical, otherwise the hunting period
    lcm(z_p, z_g) so that each tooth pairing is sampled once.
    """
    try:
        started = time.perf_counter()
        contact = contact_properties(pair.pinion, pair.gear)
        wheels = build_wheel_geometries(pair, errors, fault, n_points, fillet_radius_coeff)
        if n_mesh_cycles is None:
            uniform = errors.is_zero and not (wheels["pinion"].faulted_teeth or wheels["gear"].faulted_teeth)
            n_mesh_cycles = 1 if uniform else math.lcm(pair.pinion.tooth_count, pair.gear.tooth_count)
        curve = gms_from_geometry(contact, wheels["pinion"], wheels["gear"], n_cyc, n_mesh_cycles)
        logger.info(
            f"Mesh stiffness over {n_mesh_cycles} mesh cycle(s): mean {curve.mean_stiffness:.4e} N/m, "
            f"range [{curve.stiffness.min():.4e}, {curve.stiffness.max():.4e}] "
            f"({time.perf_counter() - started:.2f}s)"
        )
        return curve
    except ContactLossError:
        logger.error("Mesh stiffness failed: contact lost", exc_info=True)
        raise
