"""
Conformally flat metrics ``g = f(s)^2 G`` with ``s^2 = x^T G x``.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from ..geometry import DomainError, MetricField

__all__ = [
    "SIGNATURE",
    "ScaleFunction",
    "constant_scale",
    "uniform_scale",
    "interval",
    "friedmann_lobachevsky",
    "fl_christoffel_closed_form",
]

SIGNATURE = np.diag([-1.0, -1.0, -1.0, 1.0])
LIGHT_CONE_TOL = 1e-8


@dataclass(frozen=True)
class ScaleFunction:
    """A conformal factor ``f(s)`` with optional analytic derivatives.

    Missing derivatives fall back to five-point finite differences.
    """

    f: Callable
    df: Optional[Callable] = None
    d2f: Optional[Callable] = None
    name: str = "f"

    def __call__(self, s):
        return self.f(s)

    def d1(self, s):
        if self.df is not None:
            return self.df(s)
        h = 1e-4 * max(1.0, abs(s))
        f = self.f
        return (-f(s + 2 * h) + 8 * f(s + h) - 8 * f(s - h) + f(s - 2 * h)) / (12 * h)

    def d2(self, s):
        if self.d2f is not None:
            return self.d2f(s)
        if self.df is not None:
            h = 1e-4 * max(1.0, abs(s))
            df = self.df
            return (-df(s + 2 * h) + 8 * df(s + h) - 8 * df(s - h) + df(s - 2 * h)) / (12 * h)
        h = 1e-3 * max(1.0, abs(s))
        f = self.f
        return (-f(s + 2 * h) + 16 * f(s + h) - 30 * f(s) + 16 * f(s - h) - f(s - 2 * h)) / (12 * h * h)


def constant_scale(value=1.0):
    return ScaleFunction(f=lambda s: value, df=lambda s: 0.0, d2f=lambda s: 0.0, name=f"const({value})")


def uniform_scale(rho):
    """``f = 1 / (1 - rho s^2 / 12)``, the maximally uniform solution."""

    def f(s):
        return 1.0 / (1.0 - rho * s * s / 12.0)

    def df(s):
        return rho * s / 6.0 * f(s) ** 2

    def d2f(s):
        return rho / 6.0 * f(s) ** 2 + rho * s / 3.0 * f(s) * df(s)

    return ScaleFunction(f=f, df=df, d2f=d2f, name=f"uniform(rho={rho})")


def interval(x):
    """``s = sqrt(x^T G x)``; raises for points on or outside the light cone."""
    x = np.asarray(x, dtype=float)
    s2 = x[3] ** 2 - x[0] ** 2 - x[1] ** 2 - x[2] ** 2
    if s2 <= LIGHT_CONE_TOL**2:
        raise DomainError(f"point {x.tolist()} is not timelike (s^2 = {s2:.6g})", locus="s <= 0")
    return float(np.sqrt(s2))


def friedmann_lobachevsky(scale, name=None):
    """Conformal metric ``f(s)^2 G`` on the timelike region ``s > 0``."""
    if not isinstance(scale, ScaleFunction):
        scale = ScaleFunction(f=scale)

    def singular(x):
        s2 = x[3] ** 2 - x[0] ** 2 - x[1] ** 2 - x[2] ** 2
        if s2 <= LIGHT_CONE_TOL**2:
            return "light cone or spacelike region s <= 0"
        if scale(np.sqrt(s2)) <= 0:
            return "non-positive scale function"
        return None

    def metric(x):
        return scale(interval(x)) ** 2 * SIGNATURE

    def d_metric(x):
        s = interval(x)
        f, df = scale(s), scale.d1(s)
        ds = SIGNATURE @ x / s
        return 2 * f * df * ds[:, None, None] * SIGNATURE[None, :, :]

    def timelike_margin(x):
        return x[3] > 1.5 * np.linalg.norm(x[:3])

    return MetricField(
        name=name or f"fl[{scale.name}]",
        dim=4,
        eval=metric,
        d_eval=d_metric,
        chart="conformal",
        singular=singular,
        params={"scale": scale.name},
        domain=([-1.0, -1.0, -1.0, 1.0], [1.0, 1.0, 1.0, 3.0]),
        guard=timelike_margin,
    )


def fl_christoffel_closed_form(scale, x):
    """Second-kind Christoffel matrices of ``f^2 G`` in closed form:

    sigma^m = f'/(s f) * (e_m (G x)^T + (G x)_m I - x (G e_m)^T)
    """
    x = np.asarray(x, dtype=float)
    s = interval(x)
    k = scale.d1(s) / (s * scale(s))
    gx = SIGNATURE @ x
    eye = np.eye(4)
    return np.stack([k * (np.outer(eye[m], gx) + gx[m] * eye - np.outer(x, SIGNATURE[m])) for m in range(4)])
