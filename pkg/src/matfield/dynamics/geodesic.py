"""
Equation of motion ``du/dtau = -sum_m u_m sigma^m u + inv(g) P u`` and
its integration.

The integrators are written out here rather than borrowed so that event
location and step-underflow handling can work on the same stage values.
"""

from dataclasses import dataclass, field
import numpy as np

from .. import matcore
from ..geometry import DomainError, NumericalQualityError, _christoffel_arrays

__all__ = [
    "GeodesicState",
    "Trajectory",
    "normalization",
    "geodesic_rhs",
    "integrate_geodesic",
    "rkf45",
    "rk4",
    "locate_event",
]

ANTISYMMETRY_TOL = 1e-12

# Fehlberg 4(5) tableau
_C = np.array([0.0, 1 / 4, 3 / 8, 12 / 13, 1.0, 1 / 2])
_A = [
    [],
    [1 / 4],
    [3 / 32, 9 / 32],
    [1932 / 2197, -7200 / 2197, 7296 / 2197],
    [439 / 216, -8.0, 3680 / 513, -845 / 4104],
    [-8 / 27, 2.0, -3544 / 2565, 1859 / 4104, -11 / 40],
]
_B5 = np.array([16 / 135, 0.0, 6656 / 12825, 28561 / 56430, -9 / 50, 2 / 55])
_B4 = np.array([25 / 216, 0.0, 1408 / 2565, 2197 / 4104, -1 / 5, 0.0])


@dataclass(frozen=True)
class GeodesicState:
    """Point ``x``, velocity ``u = dx/dtau`` and proper time ``tau``."""

    x: np.ndarray
    u: np.ndarray
    tau: float = 0.0

    def __post_init__(self):
        x = matcore.as_vector(self.x, "x")
        u = matcore.as_vector(self.u, "u")
        if x.shape != u.shape:
            raise matcore.DimensionError("x and u must have the same dimension")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "u", u)


def normalization(field, x, u):
    """``u^T g(x) u``, equal to 1 along a timelike geodesic."""
    return float(u @ field.metric(x) @ u)


def _forcing(P_a, x):
    P = P_a(x) if callable(P_a) else P_a
    P = matcore.as_square(P, "P_a")
    if np.max(np.abs(P + P.T)) > ANTISYMMETRY_TOL * max(1.0, np.max(np.abs(P))):
        raise ValueError("forcing matrix P_a must be antisymmetric")
    return P


def _acceleration(field, x, u, P_a=None):
    g, _, sigma = _christoffel_arrays(field, x)
    du = -np.einsum("m,mij,j->i", u, sigma, u)
    if P_a is not None:
        du = du + matcore.linear_solve(g, _forcing(P_a, x) @ u)
    return du


def geodesic_rhs(field, state, P_a=None):
    """Right-hand side ``du/dtau``; without ``P_a`` this is the geodesic equation."""
    x = field.check_point(state.x)
    return _acceleration(field, x, state.u, P_a)


@dataclass
class Trajectory:
    """Sampled solution. ``status`` is ``"complete"`` or ``"truncated"``."""

    tau: np.ndarray
    x: np.ndarray
    u: np.ndarray
    status: str
    reason: str = ""
    steps: int = 0
    rejected: int = 0
    norm_drift: float = 0.0
    events: list = field(default_factory=list)

    @property
    def final(self):
        return GeodesicState(self.x[-1], self.u[-1], float(self.tau[-1]))


def _stages(f, t, y, h):
    k = np.empty((6, y.size))
    for i in range(6):
        yi = y + h * (np.dot(_A[i], k[:i]) if i else 0.0)
        k[i] = f(t + _C[i] * h, yi)
    return k


class StepFailure(Exception):
    pass


def _single_step(f, t, y, h):
    return y + h * (_B5 @ _stages(f, t, y, h))


def locate_event(f, t, y, h, event, tol=1e-12):
    """Bisect the step length in ``(0, h]`` for the zero of ``event(t, y)``.

    The value at ``t`` and the value after the full step must differ in
    sign. Returns ``(t_event, y_event)``.
    """
    g0 = event(t, y)
    lo, hi = 0.0, h
    while abs(hi - lo) > tol * max(1.0, abs(t)):
        mid = 0.5 * (lo + hi)
        if (event(t + mid, _single_step(f, t, y, mid)) > 0) == (g0 > 0):
            lo = mid
        else:
            hi = mid
    tm = 0.5 * (lo + hi)
    return t + tm, _single_step(f, t, y, tm)


def rkf45(
    f, t0, y0, t_end, rtol=1e-10, atol=1e-12, h0=None, h_max=None, max_steps=1_000_000, callback=None, events=()
):
    """Adaptive Runge-Kutta-Fehlberg 4(5) with local extrapolation.

    ``f(t, y)`` may raise :class:`DomainError` or a numerical error; such a
    step is rejected and retried with half the step. When the step would
    underflow the run stops and the reason is returned. ``callback(t, y)``
    is invoked after every accepted step and may return ``True`` to stop.

    ``events`` holds ``(event, direction, terminal)`` triples. A sign change
    of ``event(t, y)`` in the given direction (+1 rising, -1 falling, 0 any)
    is located by bisection and recorded as ``(index, t, y)``; a terminal
    event ends the run at the located point.

    Returns ``(ts, ys, status, reason, steps, rejected, hits)``.
    """
    direction = np.sign(t_end - t0) or 1.0
    span = abs(t_end - t0)
    y = np.array(y0, dtype=float)
    t = float(t0)
    h = h0 if h0 is not None else max(span * 1e-6, 1e-12)
    h = min(abs(h), span) if span > 0 else 0.0
    if h_max is not None:
        h = min(h, h_max)
    ts, ys = [t], [y.copy()]
    hits = []
    steps = rejected = 0
    last_error = ""
    while direction * (t_end - t) > 0:
        if steps >= max_steps:
            return (
                np.array(ts), np.array(ys), "truncated", f"maximum step count {max_steps} reached", steps, rejected, hits
            )
        h = min(h, abs(t_end - t))
        h_min = 1e-14 * max(1.0, abs(t))
        if h < h_min:
            reason = "step-size underflow"
            if last_error:
                reason += f" ({last_error})"
            return np.array(ts), np.array(ys), "truncated", reason, steps, rejected, hits
        try:
            k = _stages(f, t, y, direction * h)
            y5 = y + direction * h * (_B5 @ k)
            err = direction * h * ((_B5 - _B4) @ k)
            if not np.all(np.isfinite(y5)):
                raise StepFailure("non-finite state")
        except (DomainError, NumericalQualityError, matcore.SingularMatrixError, StepFailure) as exc:
            last_error = str(exc)
            rejected += 1
            h *= 0.5
            continue
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y5))
        norm = float(np.max(np.abs(err) / scale))
        if norm <= 1.0:
            stop_at = None
            for index, (event, sense, terminal) in enumerate(events):
                a, b = event(t, y), event(t + direction * h, y5)
                if (a < 0 <= b and sense >= 0) or (a > 0 >= b and sense <= 0):
                    te, ye = locate_event(f, t, y, direction * h, event)
                    hits.append((index, te, ye))
                    if terminal and stop_at is None:
                        stop_at = (te, ye)
            if stop_at is not None:
                ts.append(stop_at[0])
                ys.append(stop_at[1].copy())
                steps += 1
                break
            t = t + direction * h
            y = y5
            steps += 1
            ts.append(t)
            ys.append(y.copy())
            last_error = ""
            if callback is not None and callback(t, y):
                break
        else:
            rejected += 1
        factor = 5.0 if norm == 0 else min(5.0, max(0.2, 0.9 * norm**-0.2))
        h *= factor
        if h_max is not None:
            h = min(h, h_max)
    return np.array(ts), np.array(ys), "complete", "", steps, rejected, hits


def rk4(f, t0, y0, t_end, n_steps):
    """Classical fixed-step fourth-order Runge-Kutta."""
    h = (t_end - t0) / n_steps
    y = np.array(y0, dtype=float)
    ts, ys = [t0], [y.copy()]
    t = float(t0)
    for i in range(n_steps):
        k1 = f(t, y)
        k2 = f(t + h / 2, y + h / 2 * k1)
        k3 = f(t + h / 2, y + h / 2 * k2)
        k4 = f(t + h, y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t = t0 + (i + 1) * h
        ts.append(t)
        ys.append(y.copy())
    return np.array(ts), np.array(ys)


def integrate_geodesic(
    field,
    state0,
    tau_end,
    rtol=1e-10,
    atol=1e-12,
    method="rkf45",
    n_steps=None,
    P_a=None,
    h0=None,
    h_max=None,
    max_steps=1_000_000,
    norm_tol=1e-6,
    stop=None,
    events=(),
):
    """Integrate the equation of motion from ``state0`` to proper time ``tau_end``.

    ``method`` is ``"rkf45"`` (adaptive) or ``"rk4"`` (``n_steps`` fixed
    steps). ``stop(tau, x, u)`` may end the run early by returning ``True``.
    ``events`` holds ``(event(tau, x, u), direction, terminal)`` triples as
    in :func:`rkf45`; located events land in ``Trajectory.events`` as
    ``(index, tau, x, u)``.
    The largest ``|u^T g u - 1|`` along the accepted samples is reported as
    ``norm_drift``.
    """
    x0 = field.check_point(state0.x)
    n = field.dim
    start_norm = normalization(field, x0, state0.u)
    if P_a is None and abs(start_norm - 1.0) > norm_tol:
        raise ValueError(f"initial state is not normalized: u^T g u = {start_norm!r}")

    def f(t, y):
        x, u = y[:n], y[n:]
        if field.singular is not None:
            reason = field.singular(x)
            if reason:
                raise DomainError(reason, locus=reason)
        return np.concatenate([u, _acceleration(field, x, u, P_a)])

    y0 = np.concatenate([x0, state0.u])
    callback = None
    if stop is not None:
        callback = lambda t, y: stop(t, y[:n], y[n:])  # noqa: E731
    if method == "rkf45":
        wrapped = [(lambda t, y, e=e: e(t, y[:n], y[n:]), d, term) for e, d, term in events]
        ts, ys, status, reason, steps, rejected, hits = rkf45(
            f,
            state0.tau,
            y0,
            tau_end,
            rtol=rtol,
            atol=atol,
            h0=h0,
            h_max=h_max,
            max_steps=max_steps,
            callback=callback,
            events=wrapped,
        )
    elif method == "rk4":
        if not n_steps:
            raise ValueError("rk4 needs n_steps")
        ts, ys = rk4(f, state0.tau, y0, tau_end, n_steps)
        status, reason, steps, rejected, hits = "complete", "", n_steps, 0, []
    else:
        raise ValueError(f"unknown method {method!r}")
    target = 1.0 if P_a is None else start_norm
    drift = max(abs(float(y[n:] @ field.raw(y[:n]) @ y[n:]) - target) for y in ys)
    return Trajectory(
        tau=ts,
        x=ys[:, :n],
        u=ys[:, n:],
        status=status,
        reason=reason,
        steps=steps,
        rejected=rejected,
        norm_drift=drift,
        events=[(i, t, y[:n], y[n:]) for i, t, y in hits],
    )
