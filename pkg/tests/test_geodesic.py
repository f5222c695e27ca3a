import math

import numpy as np
import pytest

from matfield.dynamics import GeodesicState, geodesic_rhs, integrate_geodesic, normalization, rkf45
from matfield.metrics import friedmann_lobachevsky, minkowski, schwarzschild, uniform_scale


def test_state_shapes_must_match():
    from matfield.matcore import DimensionError

    with pytest.raises(DimensionError):
        GeodesicState([0.0, 0.0, 0.0, 0.0], [1.0, 0.0, 0.0])


def test_unnormalized_start_is_rejected():
    with pytest.raises(ValueError, match="normalized"):
        integrate_geodesic(minkowski(), GeodesicState(np.zeros(4), [0.0, 0.0, 0.0, 2.0]), 1.0)


def test_flat_geodesic_is_a_straight_line():
    u0 = np.array([0.3, -0.1, 0.2, math.sqrt(1.14)])
    x0 = np.array([1.0, 2.0, -1.0, 0.0])
    traj = integrate_geodesic(minkowski(), GeodesicState(x0, u0), 5.0)
    assert traj.status == "complete"
    assert np.allclose(traj.x, x0 + np.outer(traj.tau, u0), atol=1e-12)
    assert traj.norm_drift < 1e-14


def test_comoving_observer_in_conformal_metric():
    sc = uniform_scale(0.12)
    field = friedmann_lobachevsky(sc)
    x0 = np.array([0.3, 0.1, -0.2, 1.5])
    s0 = math.sqrt(x0 @ np.diag([-1, -1, -1, 1.0]) @ x0)
    u0 = x0 / (s0 * sc(s0))
    du = geodesic_rhs(field, GeodesicState(x0, u0))
    assert np.allclose(du, -x0 * sc.d1(s0) / (s0 * sc(s0) ** 3), rtol=1e-8)
    traj = integrate_geodesic(field, GeodesicState(x0, u0), 1.0)
    s = np.sqrt(traj.x[:, 3] ** 2 - np.sum(traj.x[:, :3] ** 2, axis=1))
    assert np.allclose(traj.x / s[:, None], x0 / s0, atol=1e-10)
    assert traj.norm_drift < 1e-9


def _circular_state(r_M, R):
    # circular orbit oracle: L^2 = r_M R / (1 - 3 r_M / R), E^2 = (1 - 2 r_M / R)^2 / (1 - 3 r_M / R)
    k = 1 - 3 * r_M / R
    L = math.sqrt(r_M * R / k)
    E = (1 - 2 * r_M / R) / math.sqrt(k)
    u = np.array([0.0, L / R**2, 0.0, E / (1 - 2 * r_M / R)])
    return GeodesicState(np.array([math.pi / 2, 0.0, R, 0.0]), u)


def test_circular_schwarzschild_orbit():
    field = schwarzschild(1.0)
    st = _circular_state(1.0, 10.0)
    assert normalization(field, st.x, st.u) == pytest.approx(1.0, abs=1e-14)
    period = 2 * math.pi / st.u[1]
    traj = integrate_geodesic(field, st, period)
    assert np.max(np.abs(traj.x[:, 2] - 10.0)) < 1e-7
    assert traj.x[-1, 1] == pytest.approx(2 * math.pi, rel=1e-8)
    assert traj.norm_drift < 1e-9


def test_rk4_agrees_with_rkf45():
    field = schwarzschild(1.0)
    st = GeodesicState(np.array([math.pi / 2, 0.0, 12.0, 0.0]), np.zeros(4))
    u = _circular_state(1.0, 12.0).u * np.array([1, 0.9, 1, 1])
    g = field.metric(st.x)
    u[3] = math.sqrt((1 - g[1, 1] * u[1] ** 2) / g[3, 3])
    st = GeodesicState(st.x, u)
    a = integrate_geodesic(field, st, 50.0, rtol=1e-12, atol=1e-14)
    b = integrate_geodesic(field, st, 50.0, method="rk4", n_steps=2000)
    assert np.allclose(a.final.x, b.final.x, rtol=1e-8)
    assert np.allclose(a.final.u, b.final.u, rtol=1e-7, atol=1e-12)
    with pytest.raises(ValueError):
        integrate_geodesic(field, st, 1.0, method="rk4")
    with pytest.raises(ValueError):
        integrate_geodesic(field, st, 1.0, method="euler")


def test_infall_is_truncated_at_the_singular_locus():
    field = schwarzschild(1.0)
    x0 = np.array([math.pi / 2, 0.0, 6.0, 0.0])
    u0 = np.array([0.0, 0.0, 0.0, 1 / math.sqrt(1 - 2 / 6.0)])
    traj = integrate_geodesic(field, GeodesicState(x0, u0), 100.0)
    assert traj.status == "truncated"
    assert "underflow" in traj.reason and "Schwarzschild radius" in traj.reason
    assert traj.x[-1, 2] > 2.0
    assert traj.x[-1, 2] < 2.1


def test_forcing_must_be_antisymmetric():
    st = GeodesicState(np.zeros(4), [0.0, 0.0, 0.0, 1.0])
    with pytest.raises(ValueError, match="antisymmetric"):
        integrate_geodesic(minkowski(), st, 1.0, P_a=np.eye(4))


def test_antisymmetric_forcing_preserves_normalization():
    P = np.zeros((4, 4))
    P[0, 3], P[3, 0] = 0.5, -0.5
    P[0, 1], P[1, 0] = 0.2, -0.2
    st = GeodesicState(np.zeros(4), [0.0, 0.0, 0.0, 1.0])
    traj = integrate_geodesic(minkowski(), st, 10.0, P_a=lambda x: P)
    assert traj.norm_drift < 1e-9
    assert np.max(np.abs(traj.u[-1] - st.u)) > 0.1


def test_stop_callback_ends_run():
    st = GeodesicState(np.zeros(4), [0.0, 0.0, 0.0, 1.0])
    traj = integrate_geodesic(minkowski(), st, 10.0, stop=lambda t, x, u: x[3] > 2.0)
    assert 2.0 < traj.x[-1, 3] < 10.0


def test_event_location_on_oscillator():
    f = lambda t, y: np.array([y[1], -y[0]])  # noqa: E731
    event = (lambda t, y: y[0], -1, True)
    ts, ys, status, _, _, _, hits = rkf45(f, 0.0, [1.0, 0.0], 10.0, events=[event])
    assert hits and hits[0][1] == pytest.approx(math.pi / 2, abs=1e-10)
    assert ts[-1] == hits[0][1]
    # non-terminal rising events are all recorded: cos t rises through 0 at 3pi/2 and 7pi/2
    _, _, _, _, _, _, hits = rkf45(f, 0.0, [1.0, 0.0], 12.0, events=[(lambda t, y: y[0], 1, False)])
    assert [round(h[1], 8) for h in hits] == [round(1.5 * math.pi, 8), round(3.5 * math.pi, 8)]


def test_step_cap_truncates():
    f = lambda t, y: -y  # noqa: E731
    _, _, status, reason, steps, _, _ = rkf45(f, 0.0, [1.0], 100.0, max_steps=5, h_max=0.01)
    assert status == "truncated" and steps == 5 and "maximum" in reason
