# tests/test_stiffness.py
import math

import numpy as np
import pytest

from gearsim.errors import SingularSectionError
from gearsim.schemas.fault import Healthy, ToothBreakage
from gearsim.schemas.gear import GearWheelSpec, MaterialSpec
from gearsim.schemas.geometry import ToothProfile
from gearsim.schemas.stiffness import ContactState, LoadDecomposition
from gearsim.services.geometry_service import (
    build_tooth_profile,
    build_wheel_geometries,
    contact_properties,
    generate_profile_errors,
    zero_profile_errors,
)
from gearsim.services.stiffness_service import (
    axial_shear_energies,
    axial_shear_energies_naive,
    bending_energy_fast,
    bending_energy_naive,
    gms_from_geometry,
    gms_over_cycle,
    load_at_radius,
    pair_stiffness,
    series_stiffness,
    tooth_strain_energies,
)


def sectioned(spec: GearWheelSpec, x: np.ndarray, y: np.ndarray) -> ToothProfile:
    return ToothProfile.from_sections(
        wheel="pinion",
        spec=spec,
        x_coords=x,
        half_thickness=y,
        width=spec.face_width,
        flank_radius=spec.root_radius + x,
        root_offset=spec.root_radius,
        root_half_angle=0.1,
        involute_start_radius=spec.base_radius,
        tip_radius=spec.root_radius + float(x[-1]),
    )


def random_profile(spec: GearWheelSpec, seed: int, n: int = 300) -> ToothProfile:
    rng = np.random.default_rng(seed)
    x = np.sort(rng.uniform(0, 6e-3, n))
    x[0] = 0.0
    x = np.maximum.accumulate(x + np.arange(n) * 1e-9)
    y = 2.5e-3 * (1 - 0.5 * x / x[-1]) * (1 + 0.1 * np.sin(rng.uniform(1, 5) * x / x[-1]))
    return sectioned(spec, x, y)


def random_load(seed: int, n: int = 300) -> LoadDecomposition:
    rng = np.random.default_rng(seed + 1000)
    return LoadDecomposition(axial_force=rng.uniform(-2, 2), shear_force=rng.uniform(-2, 2),
                             application_point_index=int(rng.integers(0, n)))


def test_bending_energy_vanishes_at_the_root(pinion):
    profile = build_tooth_profile(pinion, n_points=200)
    load = LoadDecomposition(axial_force=0.3, shear_force=0.9, application_point_index=0)
    assert bending_energy_fast(profile, load)[0] == 0.0
    assert bending_energy_naive(profile, load)[0] == 0.0


def test_constant_section_matches_cantilever(pinion):
    x = np.linspace(0.0, 5e-3, 2001)
    profile = sectioned(pinion, x, np.full(x.size, 2e-3))
    load = LoadDecomposition(axial_force=0.0, shear_force=1.0, application_point_index=0)
    inertia = profile.second_moment[0]
    expected = x ** 3 / (6 * pinion.material.young_modulus * inertia)
    fast = bending_energy_fast(profile, load)
    far = x >= 0.1 * x[-1]
    np.testing.assert_allclose(fast[far], expected[far], rtol=1e-4)
    np.testing.assert_allclose(bending_energy_naive(profile, load)[far], expected[far], rtol=1e-4)


def test_bending_energy_is_quadratic_in_the_forces(pinion):
    profile = build_tooth_profile(pinion, n_points=200)
    load = LoadDecomposition(axial_force=0.35, shear_force=0.94, application_point_index=10)
    doubled = LoadDecomposition(axial_force=0.7, shear_force=1.88, application_point_index=10)
    np.testing.assert_allclose(bending_energy_fast(profile, doubled), 4 * bending_energy_fast(profile, load),
                               rtol=1e-15)


@pytest.mark.parametrize("seed", range(100))
def test_fast_strain_energies_match_reference(pinion, seed):
    profile = random_profile(pinion, seed)
    load = random_load(seed)
    fast = bending_energy_fast(profile, load)
    naive = bending_energy_naive(profile, load)
    np.testing.assert_allclose(fast, naive, rtol=1e-10, atol=1e-12 * np.max(np.abs(naive)))

    axial, shear = axial_shear_energies(profile, load)
    axial_ref, shear_ref = axial_shear_energies_naive(profile, load)
    np.testing.assert_allclose(axial, axial_ref, rtol=1e-10, atol=1e-12 * np.max(np.abs(axial_ref)))
    np.testing.assert_allclose(shear, shear_ref, rtol=1e-10, atol=1e-12 * np.max(np.abs(shear_ref)))


def test_single_section_grid(pinion):
    profile = sectioned(pinion, np.array([0.0]), np.array([2e-3]))
    load = LoadDecomposition(axial_force=0.5, shear_force=1.0, application_point_index=0)
    np.testing.assert_array_equal(bending_energy_fast(profile, load), [0.0])
    np.testing.assert_array_equal(bending_energy_naive(profile, load), [0.0])


def test_axial_and_shear_vanish_without_their_force(pinion):
    profile = random_profile(pinion, 7)
    axial, shear = axial_shear_energies(profile, LoadDecomposition(0.0, 1.0, 50))
    assert np.all(axial == 0)
    assert np.any(shear > 0)
    axial, shear = axial_shear_energies(profile, LoadDecomposition(1.0, 0.0, 50))
    assert np.all(shear == 0)
    assert np.any(axial > 0)


def test_vanishing_section_below_load_point(pinion):
    x = np.linspace(0.0, 5e-3, 50)
    y = np.full(x.size, 2e-3)
    y[10] = 0.0
    profile = sectioned(pinion, x, y)
    with pytest.raises(SingularSectionError) as err:
        bending_energy_fast(profile, LoadDecomposition(0.2, 1.0, 30))
    assert err.value.index == 10


def test_series_law():
    assert series_stiffness([2e-9] * 5) == pytest.approx(1 / (5 * 2e-9))


def _pitch_point_stiffness(young_modulus: float) -> float:
    material = MaterialSpec(young_modulus=young_modulus)
    p = GearWheelSpec(tooth_count=17, module_mm=3.0, face_width_mm=20.0, hub_bore_radius_mm=10.0, material=material)
    g = GearWheelSpec(tooth_count=38, module_mm=3.0, face_width_mm=20.0, hub_bore_radius_mm=15.0, material=material)
    state = ContactState(pinion_radius=p.pitch_radius, gear_radius=g.pitch_radius)
    return pair_stiffness(build_tooth_profile(p, 400), build_tooth_profile(g, 400, wheel="gear"), state)


def test_stiffer_material_gives_stiffer_pair():
    soft = _pitch_point_stiffness(2.068e11)
    hard = _pitch_point_stiffness(4.136e11)
    assert hard > soft
    assert hard == pytest.approx(2 * soft, rel=1e-9)
    assert 1e7 < soft < 5e9


def test_contact_above_the_tip_is_not_a_pair(pinion, gear):
    state = ContactState(pinion_radius=pinion.addendum_radius * 1.01, gear_radius=gear.pitch_radius)
    assert pair_stiffness(build_tooth_profile(pinion, 200), build_tooth_profile(gear, 200, wheel="gear"), state) is None


@pytest.fixture
def healthy_wheels(pair):
    return contact_properties(pair.pinion, pair.gear), build_wheel_geometries(pair, zero_profile_errors(pair),
                                                                             Healthy(), n_points=200)


def test_healthy_curve_repeats_every_mesh_cycle(healthy_wheels):
    contact, wheels = healthy_wheels
    curve = gms_from_geometry(contact, wheels["pinion"], wheels["gear"], n_cyc=128, n_mesh_cycles=3)
    rows = curve.stiffness.reshape(3, 128)
    np.testing.assert_allclose(rows[1], rows[0], rtol=1e-12)
    np.testing.assert_allclose(rows[2], rows[0], rtol=1e-12)
    assert np.all(curve.static_transmission_error == 0)


def test_double_contact_is_stiffer_than_single_contact(healthy_wheels):
    contact, wheels = healthy_wheels
    curve = gms_from_geometry(contact, wheels["pinion"], wheels["gear"], n_cyc=256)
    engaged = np.isfinite(curve.pair_stiffness).sum(axis=1)
    assert set(np.unique(engaged)) == {1, 2}
    assert curve.stiffness[engaged == 2].min() > curve.stiffness[engaged == 1].max()
    # double-contact share of the cycle is epsilon - 1
    assert np.mean(engaged == 2) == pytest.approx(contact.contact_ratio - 1, abs=2 / 256)


def test_healthy_error_free_pair_needs_one_mesh_cycle(pair):
    curve = gms_over_cycle(pair, zero_profile_errors(pair), Healthy(), n_cyc=64, n_points=200)
    assert curve.n_mesh_cycles == 1
    assert curve.stiffness.size == 64
    assert curve.cycle_grid[1] == pytest.approx(2 * math.pi / 17 / 64)


def test_breakage_only_changes_cycles_where_the_tooth_meshes(pair):
    errors = zero_profile_errors(pair)
    fault = ToothBreakage(tip_loss_fraction=0.25, tooth_index=0)
    faulty = gms_over_cycle(pair, errors, fault, n_cyc=64, n_points=200)
    assert faulty.n_mesh_cycles == math.lcm(17, 38)
    healthy = gms_over_cycle(pair, errors, Healthy(), n_cyc=64, n_points=200, n_mesh_cycles=faulty.n_mesh_cycles)

    engaged = np.any(healthy.gear_teeth == 0, axis=1)
    np.testing.assert_allclose(faulty.stiffness[~engaged], healthy.stiffness[~engaged], rtol=1e-12)
    assert np.any(faulty.stiffness[engaged] < healthy.stiffness[engaged])
    assert np.all(faulty.stiffness[engaged] <= healthy.stiffness[engaged] * (1 + 1e-12))


def test_profile_errors_give_a_static_transmission_error(pair):
    errors = generate_profile_errors(pair, din_grade=7, seed=1)
    curve = gms_over_cycle(pair, errors, Healthy(), n_cyc=64, n_points=200)
    assert curve.n_mesh_cycles == math.lcm(17, 38)
    assert np.all(np.isfinite(curve.static_transmission_error))
    assert np.any(curve.static_transmission_error != 0)
    assert curve.mean_error_load == pytest.approx(np.mean(curve.stiffness * curve.static_transmission_error))


def test_strain_energy_breakdown_at_the_pitch_point(pinion, gear):
    profile = build_tooth_profile(pinion, n_points=400)
    load = load_at_radius(profile, pinion.pitch_radius)
    breakdown = tooth_strain_energies(profile, load, gear)
    assert breakdown.bending[0] == 0.0
    for energy in (breakdown.bending, breakdown.axial, breakdown.shear):
        assert np.isfinite(energy[load.application_point_index])
        assert np.all(energy[np.isfinite(energy)] >= 0)
    assert breakdown.hertz_compliance > 0
    assert breakdown.foundation_compliance > 0


def test_more_tip_loss_never_stiffens_the_mesh(pair):
    errors = zero_profile_errors(pair)
    cycles = math.lcm(17, 38)
    curves = [
        gms_over_cycle(pair, errors, ToothBreakage(tip_loss_fraction=f, tooth_index=0), n_cyc=32, n_points=200,
                       n_mesh_cycles=cycles)
        for f in (0.0, 0.1, 0.25, 0.5)
    ]
    for milder, worse in zip(curves, curves[1:]):
        assert np.all(worse.stiffness <= milder.stiffness * (1 + 1e-12))
        assert worse.mean_stiffness < milder.mean_stiffness
    assert np.all(curves[-1].stiffness > 0)
