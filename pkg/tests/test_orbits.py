import math

import numpy as np
import pytest
import scipy.optimize

from matfield.dynamics import (
    DivergenceError,
    MotionConstants,
    OrbitSpec,
    PlanetRecord,
    bundled_planets,
    extreme_velocities,
    four_velocity_general,
    load_planets,
    orbit_constants,
    orbit_rhs_general,
    orbit_rhs_weak,
    weak_energy,
    planet_table,
    plane_orbit_velocity,
    precession,
    precession_geodesic,
    precession_numeric,
    radial_extremum,
    radial_velocity_weak,
    radial_velocity_schwarzschild,
    schwarzschild_energy,
)
from matfield.geometry import DomainError
from matfield.metrics import SphericalSolutionParams, bundled_constants, mass_to_length, weak_spherical

CONSTS = bundled_constants()
R_SUN_KM = mass_to_length(CONSTS.M_sun, CONSTS) / 1000.0
PLANETS = bundled_planets()


def _spec(rec):
    return OrbitSpec(p=rec.perihelion_km, a=rec.aphelion_km, r_M=R_SUN_KM)


def test_orbit_spec_validation():
    with pytest.raises(ValueError):
        OrbitSpec(p=2.0, a=1.0, r_M=0.1)
    with pytest.raises(DomainError):
        OrbitSpec(p=1.0, a=5.0, r_M=0.5)
    with pytest.raises(ValueError):
        MotionConstants(0.0, 1.0, 0, 1.0)


def test_f1_outside_orbit():
    spec = OrbitSpec(p=10.0, a=20.0, r_M=0.1)
    with pytest.raises(DomainError):
        spec.f1(9.0)


@pytest.mark.parametrize("rec", PLANETS, ids=[r.name for r in PLANETS])
def test_radial_velocity_vanishes_at_turning_points(rec):
    spec = _spec(rec)
    for x3 in (spec.p, spec.a):
        u = plane_orbit_velocity(spec, x3)
        assert abs(u[2]) <= 1e-12


@pytest.mark.parametrize("geometry", ["weak", "schwarzschild"])
def test_plane_velocity_is_normalized(geometry):
    spec = OrbitSpec(p=40.0, a=90.0, r_M=1.0)
    field = weak_spherical(1.0) if geometry == "weak" else None
    from matfield.metrics import schwarzschild

    field = field or schwarzschild(1.0)
    for x3 in np.linspace(40.0, 90.0, 7):
        x = np.array([math.pi / 2, 0.0, x3, 0.0])
        u = plane_orbit_velocity(spec, x3, geometry=geometry, c3=-1)
        assert u @ field.metric(x) @ u == pytest.approx(1.0, abs=1e-10)


def test_schwarzschild_and_weak_time_rates_differ_by_closed_form():
    spec = OrbitSpec(p=40.0, a=90.0, r_M=1.0)
    r = spec.r_M
    for x3 in (45.0, 60.0, 85.0):
        uw = plane_orbit_velocity(spec, x3, "weak")
        us = plane_orbit_velocity(spec, x3, "schwarzschild")
        expected = 2 * r * spec.f1(x3) / ((x3 - 2 * r) * spec.f2 * x3)
        assert uw[3] - us[3] == pytest.approx(expected, rel=1e-10)


def test_general_velocity_agrees_with_plane_form():
    spec = OrbitSpec(p=40.0, a=90.0, r_M=1.0)
    consts = orbit_constants(spec)
    params = SphericalSolutionParams(c6=3.0)
    for x3 in (45.0, 70.0):
        u = four_velocity_general(params, consts, [math.pi / 2, 0.0, x3, 0.0])
        assert np.allclose(u, plane_orbit_velocity(spec, x3), rtol=1e-9, atol=1e-12)


def test_general_velocity_outside_orbit_is_forbidden():
    spec = OrbitSpec(p=40.0, a=90.0, r_M=1.0)
    with pytest.raises(DomainError):
        four_velocity_general(SphericalSolutionParams(c6=3.0), orbit_constants(spec), [math.pi / 2, 0.0, 120.0, 0.0])


def test_newtonian_limit_of_energy_constant():
    c4 = [orbit_constants(OrbitSpec(p=40.0, a=90.0, r_M=r)).c4 for r in (1e-4, 1e-6, 1e-8)]
    assert abs(c4[-1] - 1) < abs(c4[0] - 1)
    assert c4[-1] == pytest.approx(1.0, abs=1e-8)


def test_general_orbit_equation_reduces_to_weak():
    r = 0.7
    params = SphericalSolutionParams(c5=0.0, c6=3 * r, c7=0.0)
    for k in (0.01, 0.05, 0.2):
        assert orbit_rhs_general(k, 2.3, 1.01, params) == pytest.approx(orbit_rhs_weak(k, 2.3, r), rel=1e-10)


def test_precession_weak_field_limit():
    # 6 pi r_M over the semi-latus rectum 2 a p / (a + p)
    for r in (1e-4, 1e-6):
        spec = OrbitSpec(p=40.0, a=90.0, r_M=r)
        assert precession(spec) == pytest.approx(6 * math.pi * r * 130.0 / (2 * 90.0 * 40.0), rel=20 * r)


def test_precession_of_circular_orbit_is_an_error():
    with pytest.raises(ValueError, match="circular"):
        precession(OrbitSpec(p=50.0, a=50.0, r_M=1.0))
    with pytest.raises(ValueError, match="circular"):
        precession_numeric(OrbitSpec(p=50.0, a=50.0, r_M=1.0))


def test_precession_vanishes_without_mass():
    assert precession_numeric(OrbitSpec(p=40.0, a=90.0, r_M=0.0)) == pytest.approx(0.0, abs=1e-9)


@pytest.mark.parametrize("p, a", [(40.0, 90.0), (100.0, 130.0)])
@pytest.mark.parametrize("r_M", [0.05, 1e-3, 1e-5])
def test_numeric_precession_matches_closed_form(p, a, r_M):
    # the closed form is first order in r_M; the remainder is of relative order r_M / p, larger for nearly circular orbits
    spec = OrbitSpec(p=p, a=a, r_M=r_M)
    assert precession_numeric(spec) == pytest.approx(precession(spec), rel=30 * r_M / p, abs=1e-11)


def test_numeric_precession_divergence_is_reported():
    # far inside the last stable orbit the orbit plunges before returning
    with pytest.raises((DivergenceError, DomainError)):
        precession_numeric(OrbitSpec(p=4.5, a=30.0, r_M=1.0))


def test_extreme_velocities_ordering_and_newtonian_limit():
    spec = OrbitSpec(p=40.0, a=90.0, r_M=1e-6)
    v = extreme_velocities(spec)
    assert v.beta_min < v.beta_max
    assert v.beta_max / v.beta_min == pytest.approx(90.0 / 40.0, rel=1e-6)
    # vis-viva at perihelion
    assert v.beta_max**2 == pytest.approx(2e-6 * (1 / 40 - 1 / 130), rel=1e-5)


def test_radial_velocity_limits_and_sign():
    c4 = schwarzschild_energy(math.inf, 0.0, 1.0)
    assert c4 == 1.0
    assert radial_velocity_schwarzschild(2.0, c4, 1.0) == 0.0
    assert radial_velocity_schwarzschild(1e9, c4, 1.0) == pytest.approx(-math.sqrt(2e-9), rel=1e-6)
    with pytest.raises(DomainError):
        radial_velocity_schwarzschild(1.5, c4, 1.0)


def test_weak_geometry_reaches_light_speed_at_horizon():
    # c4 = 1: Q = s and beta = -s (1 + s^2) / (1 + s^2) = -s
    for y3 in (2.0, 8.0, 50.0):
        assert radial_velocity_weak(y3, math.inf, 0.0, 1.0) == pytest.approx(-math.sqrt(2 / y3), rel=1e-12)
    assert weak_energy(math.inf, 0.0, 1.0) == 1.0


def test_weak_geometry_monotone_speed():
    ys = np.linspace(2.0, 100.0, 60)
    b = [radial_velocity_weak(y, 100.0, -0.1, 1.0) for y in ys]
    assert np.all(np.diff(b) > 0)
    assert b[-1] == pytest.approx(-0.1, rel=1e-12)


def test_schwarzschild_start_speed_round_trips():
    c4 = schwarzschild_energy(20.0, -0.2, 1.0)
    assert radial_velocity_schwarzschild(20.0, c4, 1.0) == pytest.approx(-0.2, rel=1e-12)
    with pytest.raises(DomainError):
        schwarzschild_energy(20.0, 0.95, 1.0)


@pytest.mark.parametrize("c4", [1.0, 0.9, 1.1])
def test_radial_extremum_matches_numeric_maximum(c4):
    r = 1.0
    ext = radial_extremum(c4, r)
    # a bound fall (c4 < 1) starts from rest at g = c4^2
    y_max = 2 * r / (1 - c4 * c4) if c4 < 1 else 200.0
    res = scipy.optimize.minimize_scalar(
        lambda y: radial_velocity_schwarzschild(y, c4, r),
        bounds=(2.0001, y_max),
        method="bounded",
        options={"xatol": 1e-10},
    )
    assert res.x == pytest.approx(ext.y3m, rel=1e-4)
    assert res.fun == pytest.approx(ext.beta3m, rel=1e-9)
    assert radial_velocity_schwarzschild(ext.y3m, c4, r) == pytest.approx(ext.beta3m, rel=1e-12)


def test_radial_extremum_from_rest_at_infinity():
    ext = radial_extremum(1.0, 1.0)
    assert ext.y3m == pytest.approx(6.0, rel=1e-14)
    assert ext.beta3m == pytest.approx(-2 / (3 * math.sqrt(3)), rel=1e-14)
    with pytest.raises(DomainError):
        radial_extremum(1.3, 1.0)


def test_mercury_row():
    rows = planet_table([p for p in PLANETS if p.name == "Mercury"], CONSTS)
    row = rows[0]
    assert row.dphi_per_rev == pytest.approx(0.103522, rel=1e-5)
    assert row.dphi_per_century == pytest.approx(42.9826, rel=1e-5)
    assert row.v_min == pytest.approx(38.8578, rel=1e-5)
    assert row.v_max == pytest.approx(58.9793, rel=1e-5)
    assert row.error == ""


def test_planet_table_shapes():
    assert planet_table([], CONSTS) == []
    rows = planet_table(PLANETS, CONSTS)
    assert [r.name for r in rows][:3] == ["Mercury", "Venus", "Earth"]
    per_rev = [r.dphi_per_rev for r in rows]
    assert all(x > 0 for x in per_rev)


def test_planet_table_flags_bad_rows():
    bad = PlanetRecord("Dot", 1e6, 1e6, 10.0)
    row = planet_table([bad], CONSTS)[0]
    assert math.isnan(row.dphi_per_rev) and "circular" in row.error


def test_planet_loader(tmp_path):
    path = tmp_path / "p.csv"
    path.write_text("# comment\nname,perihelion_km,aphelion_km,period_days\nX,1e6,2e6,100\n")
    assert load_planets(path) == [PlanetRecord("X", 1e6, 2e6, 100.0)]
    path.write_text("name,perihelion_km\nX,1\n")
    with pytest.raises(ValueError, match="header"):
        load_planets(path)
    path.write_text("name,perihelion_km,aphelion_km,period_days\nX,3e6,2e6,100\n")
    with pytest.raises(ValueError, match="row 2"):
        load_planets(path)
    assert len(load_planets()) == 9


@pytest.mark.parametrize("p, a", [(40.0, 90.0), (400.0, 900.0)])
def test_geodesic_and_orbit_equation_agree_in_strong_field(p, a):
    spec = OrbitSpec(p=p, a=a, r_M=1.0)
    dphi, traj = precession_geodesic(spec)
    assert traj.norm_drift < 1e-10
    assert dphi == pytest.approx(precession_numeric(spec), rel=1e-8)


@pytest.mark.parametrize("u2, u3", [(0.01, 0.05), (0.02, -0.1), (0.005, 0.0)])
def test_general_orbit_equation_matches_equation_of_motion(u2, u3):
    # d2k/dphi2 from the geodesic acceleration at an equatorial state, with k = 1 / x3
    from matfield.dynamics import GeodesicState, geodesic_rhs
    from matfield.metrics import general_spherical

    params = SphericalSolutionParams(c5=1.0, c6=0.3, c7=1e-4)
    field = general_spherical(params)
    x = np.array([math.pi / 2, 0.0, 12.0, 0.0])
    g = field.metric(x)
    a, b, c = g[3, 3], 2 * g[2, 3] * u3, g[1, 1] * u2**2 + g[2, 2] * u3**2 - 1
    u4 = (-b + math.sqrt(b * b - 4 * a * c)) / (2 * a)
    acc = geodesic_rhs(field, GeodesicState(x, [0.0, u2, u3, u4]))
    r = x[2]
    dk = -u3 / r**2
    d2k = -acc[2] / r**2 + 2 * u3**2 / r**3
    kpp = (d2k * u2 - dk * acc[1]) / u2**3
    c2, c4 = g[1, 1] * u2, g[2, 3] * u3 + g[3, 3] * u4
    assert orbit_rhs_general(1 / r, c2, c4, params) == pytest.approx(kpp, rel=1e-10)
