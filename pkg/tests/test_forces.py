import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from iceshed.clipping import partition, plane_totals
from iceshed.forces import (ForceCurve, ForceSample, adhesion_force, centrifugal_force,
                            cohesion_force, force_profile, rpm_to_omega, samples_from_totals)
from iceshed.strength import constant_model

from slab_oracle import Slab


def test_rpm_to_omega():
    assert rpm_to_omega(600) == pytest.approx(62.83185307179586, rel=1e-15)
    assert rpm_to_omega(0) == 0.0


def test_unit_tet_centrifugal(unit_tet_mesh):
    (piece,) = partition(unit_tet_mesh, [-1.0])[1:]
    # V = 1/6, centroid z = 1/4
    assert centrifugal_force(piece, 2.0, 900.0) == pytest.approx(900 * 4 * (1 / 6) * 0.25)


def test_zero_omega_gives_zero(unit_tet_mesh):
    piece = partition(unit_tet_mesh, [0.3])[1]
    assert centrifugal_force(piece, 0.0, 900.0) == 0.0


def test_cohesion_and_adhesion_basic(unit_tet_mesh):
    assert cohesion_force(1e-3, 1e6) == pytest.approx(1e3)
    piece = partition(unit_tet_mesh, [0.3])[1]
    assert adhesion_force(piece, 1e5) == 0.0  # unit tet has no adhesion faces
    with pytest.raises(ValueError):
        cohesion_force(-1.0, 1e5)
    with pytest.raises(ValueError):
        centrifugal_force(piece, -1.0, 900.0)


def test_slab_forces_match_closed_form():
    s = Slab()
    mesh = s.mesh(cells=40)
    model = constant_model(s.sigma_c, s.tau_a)
    z = np.linspace(s.r0 + 0.03, s.R - 0.03, 10)
    curve = force_profile(mesh, z, s.omega, model, -8.0)
    assert np.allclose(curve.z, z)
    assert np.allclose(curve.F_C, s.F_C(z), rtol=1e-3)
    assert np.allclose(curve.F_coh, s.F_coh(z), rtol=1e-3)
    assert np.allclose(curve.F_adh, s.F_adh(z), rtol=1e-3)
    # the slab is prismatic so these are exact, not just within 0.1%
    assert np.allclose(curve.F_C, s.F_C(z), rtol=1e-10)


def test_two_routes_agree():
    s = Slab()
    mesh = s.mesh(cells=13)
    model = constant_model(s.sigma_c, s.tau_a)
    z = np.sort(np.random.default_rng(2).uniform(s.r0, s.R, 12))
    a = force_profile(mesh, z, s.omega, model, -8.0)
    b = samples_from_totals(plane_totals(mesh, z), s.omega, mesh.density, s.sigma_c, s.tau_a)
    for x, y in zip(a.samples, b):
        assert x.z == y.z
        assert x.F_C == pytest.approx(y.F_C, rel=1e-12)
        assert x.F_coh == pytest.approx(y.F_coh, rel=1e-12)
        assert x.F_adh == pytest.approx(y.F_adh, rel=1e-12, abs=1e-12)


def test_csv_round_trip(tmp_path):
    curve = ForceCurve([ForceSample(0.9, 1.0 / 3, 2e5, 0.1), ForceSample(0.7, 5.0, 2e5, 7.0)])
    assert [s.z for s in curve.samples] == [0.7, 0.9]
    text = curve.to_csv()
    assert text.splitlines()[0] == "z_m,F_centrifugal_N,F_cohesion_N,F_adhesion_N"
    back = ForceCurve.from_csv(text)
    assert back.samples == curve.samples
    with pytest.raises(ValueError):
        ForceCurve.from_csv("a,b,c,d\n1,2,3,4\n")


@pytest.fixture(scope="module")
def slab_mesh():
    return Slab().mesh(cells=11, n_contact=2, n_side=2, n_top=2)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0.6, 1.17), min_size=2, max_size=6, unique=True),
       st.floats(0.0, 200.0), st.floats(0.5, 4.0))
def test_additivity_and_omega_scaling(slab_mesh, zs, omega, k):
    planes = np.sort(zs)
    if np.any(np.diff(planes) < 1e-6):
        return
    pieces = partition(slab_mesh, planes)
    rho = slab_mesh.density
    whole = centrifugal_force(partition(slab_mesh, planes[:1])[1], omega, rho)
    parts = sum(centrifugal_force(p, omega, rho) for p in pieces[1:])
    assert parts == pytest.approx(whole, rel=1e-12, abs=1e-12)
    adh_whole = adhesion_force(partition(slab_mesh, planes[:1])[1], 1e5)
    adh_parts = sum(adhesion_force(p, 1e5) for p in pieces[1:])
    assert adh_parts == pytest.approx(adh_whole, rel=1e-12, abs=1e-12)
    for p in pieces:
        assert centrifugal_force(p, k * omega, rho) == pytest.approx(
            k ** 2 * centrifugal_force(p, omega, rho), rel=1e-12, abs=1e-300)


@given(st.floats(0.6, 1.17), st.floats(500.0, 1000.0))
def test_density_linearity(slab_mesh, z, rho):
    piece = partition(slab_mesh, [z])[1]
    assert centrifugal_force(piece, 50.0, rho) == pytest.approx(
        rho / 900.0 * centrifugal_force(piece, 50.0, 900.0), rel=1e-13)


def test_refinement_independence():
    s = Slab()
    z = np.linspace(0.62, 1.15, 7)
    model = constant_model(s.sigma_c, s.tau_a)
    coarse = force_profile(s.mesh(cells=5, n_contact=1, n_side=1, n_top=1), z, s.omega, model, -8)
    fine = force_profile(s.mesh(cells=31, n_contact=5, n_side=3, n_top=4), z, s.omega, model, -8)
    assert np.allclose(coarse.F_C, fine.F_C, rtol=1e-10)
    assert np.allclose(coarse.F_coh, fine.F_coh, rtol=1e-10)
    assert np.allclose(coarse.F_adh, fine.F_adh, rtol=1e-10)


def test_tipward_forces_monotone():
    s = Slab()
    mesh = s.mesh(cells=9)
    z = np.linspace(s.r0 - 0.1, s.R + 0.1, 40)
    curve = force_profile(mesh, z, s.omega, constant_model(s.sigma_c, s.tau_a), -8)
    assert np.all(np.diff(curve.F_C) <= 1e-12)
    assert np.all(np.diff(curve.F_adh) <= 1e-12)
    assert curve.F_C[-1] == 0.0 and curve.F_adh[-1] == 0.0
