"""
Spherically symmetric metrics.

Spherical charts use ``x = (theta, phi, r, ct)``; the rectilinear chart uses
``x = (x1, x2, x3, ct)`` with ``r = |(x1, x2, x3)|``. Every constructor
returns a :class:`~matfield.geometry.MetricField` with hand-derived first
derivatives.
"""

from dataclasses import dataclass

import numpy as np

from ..geometry import DomainError, MetricField

__all__ = [
    "SphericalSolutionParams",
    "minkowski",
    "general_spherical",
    "general_spherical_components",
    "weak_spherical",
    "general_weak",
    "schwarzschild",
    "rectilinear_spherical",
    "rectilinear_components",
    "rectilinear_g44_closed_form",
]

LOCUS_RTOL = 1e-6
POLE_TOL = 1e-8


@dataclass(frozen=True)
class SphericalSolutionParams:
    """Constants of the spherically symmetric solution.

    ``c5`` sets the inner radius where the metric degenerates, ``c6`` the
    central mass (``c6 = 3 r_M``), ``c7 = rho / 3`` the uniform density and
    ``c8`` the time-orientation sign.
    """

    c5: float = 0.0
    c6: float = 0.0
    c7: float = 0.0
    c8: float = 1.0

    def __post_init__(self):
        if not all(np.isfinite([self.c5, self.c6, self.c7, self.c8])):
            raise ValueError("spherical solution constants must be finite")
        if self.c5 < 0:
            raise ValueError(f"c5 must be non-negative, got {self.c5}")
        if self.c8 not in (1.0, -1.0):
            raise ValueError(f"c8 must be +1 or -1, got {self.c8}")

    @property
    def rho(self):
        return 3.0 * self.c7


def _angular(theta, r2, dr2):
    """Angular block ``-r2 * diag(1, sin^2)`` and its derivatives."""
    s, c = np.sin(theta), np.cos(theta)
    g11, g22 = -r2, -r2 * s * s
    d = {(0, 1, 1): -r2 * 2 * s * c, (2, 0, 0): -dr2, (2, 1, 1): -dr2 * s * s}
    return g11, g22, d


def _spherical_matrix(theta, r2, g33, g34, g44):
    s = np.sin(theta)
    return np.array(
        [
            [-r2, 0.0, 0.0, 0.0],
            [0.0, -r2 * s * s, 0.0, 0.0],
            [0.0, 0.0, g33, g34],
            [0.0, 0.0, g34, g44],
        ]
    )


def _spherical_derivative(theta, r2, dr2, dg33, dg34, dg44):
    dg = np.zeros((4, 4, 4))
    for (c, a, b), v in _angular(theta, r2, dr2)[2].items():
        dg[c, a, b] = v
    dg[2, 2, 2] = dg33
    dg[2, 2, 3] = dg[2, 3, 2] = dg34
    dg[2, 3, 3] = dg44
    return dg


def _pole(x):
    if abs(np.sin(x[0])) < POLE_TOL:
        return "polar axis sin(x1) = 0"
    return None


def minkowski(dim=4):
    """Constant signature metric ``diag(-1, ..., -1, 1)``."""
    G = np.diag([-1.0] * (dim - 1) + [1.0])
    zero = np.zeros((dim,) * 3)
    return MetricField(
        name="minkowski",
        dim=dim,
        eval=lambda x: G.copy(),
        d_eval=lambda x: zero.copy(),
        chart="rectilinear",
        domain=(-10.0 * np.ones(dim), 10.0 * np.ones(dim)),
    )


def general_spherical_components(params, r):
    """Radial profile ``(W, g33, g34, g44)`` and derivatives ``d/dr`` of each.

    ``W = (r^3 - c5^3)^(1/3)`` is the areal radius; the angular block is
    ``-W^2 diag(1, sin^2 theta)``. ``g44`` is ``1/h^6 - f^2`` in the reduced
    form ``1 - 2 c6 / (3 W) - c7 W^2`` and ``g34 = -c8 sqrt(N) / (r W^2)``.
    """
    c5, c6, c7, c8 = params.c5, params.c6, params.c7, params.c8
    w0 = r**3 - c5**3
    if w0 <= 0:
        raise DomainError(f"r = {r} is inside the inner radius c5 = {c5}", locus="r <= c5")
    W = np.cbrt(w0)
    N = c5**3 * (2 * r**3 - c5**3) + (2 * c6 / 3) * W**5 + c7 * W**8
    if N < 0:
        raise DomainError(f"radicand of g34 is negative at r = {r}", locus="negative radicand")
    dW = r**2 / W**2
    g33 = -(W**2) / r**2
    g44 = 1 - 2 * c6 / (3 * W) - c7 * W**2
    g34 = -c8 * np.sqrt(N) / (r * W**2)
    dN = 6 * c5**3 * r**2 + (10 * c6 / 3) * r**2 * W**2 + 8 * c7 * r**2 * W**5
    dg33 = -2 / W + 2 * W**2 / r**3
    dg44 = (2 * c6 / 3) * dW / W**2 - 2 * c7 * W * dW
    dg34 = g34 * (dN / (2 * N) - 1 / r - 2 * dW / W) if N > 0 else 0.0
    return (W, g33, g34, g44), (dW, dg33, dg34, dg44)


def general_spherical(params):
    """Spherically symmetric solution with constant density ``3 c7``."""

    def singular(x):
        if x[2] <= params.c5 * (1 + LOCUS_RTOL):
            return f"inner radius x3 <= c5 = {params.c5}"
        return _pole(x)

    def metric(x):
        (W, g33, g34, g44), _ = general_spherical_components(params, x[2])
        return _spherical_matrix(x[0], W * W, g33, g34, g44)

    def d_metric(x):
        (W, *_), (dW, dg33, dg34, dg44) = general_spherical_components(params, x[2])
        return _spherical_derivative(x[0], W * W, 2 * W * dW, dg33, dg34, dg44)

    r_lo = max(2.0 * params.c5, 1.0)
    return MetricField(
        name="general-spherical",
        dim=4,
        eval=metric,
        d_eval=d_metric,
        chart="spherical",
        singular=singular,
        params={"c5": params.c5, "c6": params.c6, "c7": params.c7, "c8": params.c8},
        domain=([0.3, 0.0, r_lo, -10.0], [np.pi - 0.3, 2 * np.pi, r_lo + 20.0, 10.0]),
    )


def weak_spherical(r_M, c7=0.0, c8=1.0):
    """Weak solution: Euclidean radial part and off-diagonal ``g34``."""
    if r_M < 0:
        raise ValueError(f"r_M must be non-negative, got {r_M}")
    if c8 not in (1.0, -1.0):
        raise ValueError(f"c8 must be +1 or -1, got {c8}")

    def radial(r):
        q = 2 * r_M / r + c7 * r * r
        if q < 0:
            raise DomainError(f"radicand 2 r_M / r + c7 r^2 is negative at r = {r}", locus="negative radicand")
        g34 = -c8 * np.sqrt(q)
        g44 = 1 - q
        dq = -2 * r_M / r**2 + 2 * c7 * r
        dg34 = -c8 * dq / (2 * np.sqrt(q)) if q > 0 else 0.0
        return g34, g44, dg34, -dq

    def singular(x):
        if x[2] <= 0:
            return "origin x3 <= 0"
        if 2 * r_M / x[2] + c7 * x[2] ** 2 < 0:
            return "negative radicand 2 r_M / x3 + c7 x3^2"
        return _pole(x)

    def metric(x):
        g34, g44, _, _ = radial(x[2])
        return _spherical_matrix(x[0], x[2] ** 2, -1.0, g34, g44)

    def d_metric(x):
        _, _, dg34, dg44 = radial(x[2])
        return _spherical_derivative(x[0], x[2] ** 2, 2 * x[2], 0.0, dg34, dg44)

    r_lo = max(4.0 * r_M, 1.0)
    return MetricField(
        name="weak",
        dim=4,
        eval=metric,
        d_eval=d_metric,
        chart="spherical",
        singular=singular,
        params={"r_M": r_M, "c7": c7, "c8": c8},
        domain=([0.3, 0.0, r_lo, -10.0], [np.pi - 0.3, 2 * np.pi, r_lo + 40.0, 10.0]),
    )


def _scalar_derivative(fn, r):
    h = 1e-5 * max(1.0, abs(r))
    return (-fn(r + 2 * h) + 8 * fn(r + h) - 8 * fn(r - h) + fn(r - 2 * h)) / (12 * h)


def general_weak(g33_fn, r_M, rho=0.0, c8=1.0, dg33_fn=None, name="general-weak", radicand_atol=1e-12):
    """Weak-type metric with a free radial function ``g33``.

    ``g44 = 1 - 2 r_M / r - (rho / 3) r^2`` and
    ``g34 = -c8 sqrt(1 + g33 g44)`` so that the 3-4 block determinant is
    ``-1``. A radicand within ``radicand_atol`` of zero is treated as zero,
    which is the diagonal case ``g33 = -1 / g44``.
    """
    if c8 not in (1.0, -1.0):
        raise ValueError(f"c8 must be +1 or -1, got {c8}")
    d33 = dg33_fn if dg33_fn is not None else (lambda r: _scalar_derivative(g33_fn, r))

    def radial(r):
        g33 = float(g33_fn(r))
        g44 = 1 - 2 * r_M / r - rho / 3 * r * r
        dg44 = 2 * r_M / r**2 - 2 * rho / 3 * r
        q = 1 + g33 * g44
        if q < -radicand_atol:
            raise DomainError(f"radicand 1 + g33 g44 is negative at r = {r}", locus="negative radicand")
        if q <= radicand_atol:
            return g33, 0.0, g44, float(d33(r)), 0.0, dg44
        dg33 = float(d33(r))
        g34 = -c8 * np.sqrt(q)
        dg34 = -c8 * (dg33 * g44 + g33 * dg44) / (2 * np.sqrt(q))
        return g33, g34, g44, dg33, dg34, dg44

    def singular(x):
        if x[2] <= 0:
            return "origin x3 <= 0"
        if r_M > 0 and x[2] <= 2 * r_M * (1 + LOCUS_RTOL) and float(g33_fn(x[2])) * (1 - 2 * r_M / x[2]) > 0:
            return f"horizon x3 <= 2 r_M = {2 * r_M}"
        return _pole(x)

    def metric(x):
        g33, g34, g44, *_ = radial(x[2])
        return _spherical_matrix(x[0], x[2] ** 2, g33, g34, g44)

    def d_metric(x):
        _, _, _, dg33, dg34, dg44 = radial(x[2])
        return _spherical_derivative(x[0], x[2] ** 2, 2 * x[2], dg33, dg34, dg44)

    r_lo = max(4.0 * r_M, 1.0)
    return MetricField(
        name=name,
        dim=4,
        eval=metric,
        d_eval=d_metric,
        chart="spherical",
        singular=singular,
        params={"r_M": r_M, "rho": rho, "c8": c8},
        domain=([0.3, 0.0, r_lo, -10.0], [np.pi - 0.3, 2 * np.pi, r_lo + 40.0, 10.0]),
    )


def schwarzschild(r_M):
    """Diagonal vacuum metric, singular at ``x3 = 2 r_M``."""
    if r_M <= 0:
        raise ValueError(f"r_M must be positive, got {r_M}")

    def singular(x):
        if x[2] <= 2 * r_M * (1 + LOCUS_RTOL):
            return f"Schwarzschild radius x3 <= 2 r_M = {2 * r_M}"
        return _pole(x)

    def metric(x):
        A = 1 - 2 * r_M / x[2]
        return _spherical_matrix(x[0], x[2] ** 2, -1 / A, 0.0, A)

    def d_metric(x):
        r = x[2]
        A = 1 - 2 * r_M / r
        dA = 2 * r_M / r**2
        return _spherical_derivative(x[0], r * r, 2 * r, dA / A**2, 0.0, dA)

    return MetricField(
        name="schwarzschild",
        dim=4,
        eval=metric,
        d_eval=d_metric,
        chart="spherical",
        singular=singular,
        params={"r_M": r_M},
        domain=([0.3, 0.0, 5.0 * r_M, -10.0], [np.pi - 0.3, 2 * np.pi, 50.0 * r_M, 10.0]),
    )


def rectilinear_components(params, r):
    """Radial profile ``(w, f, g44)`` of the rectilinear chart and ``d/dr`` of each.

    Here ``c6`` is the mass length itself, so the weak limit reads
    ``g44 = 1 - 2 c6 / r - c7 r^2``.
    """
    c5, c6, c7 = params.c5, params.c6, params.c7
    w0 = r**3 - c5**3
    if w0 <= 0:
        raise DomainError(f"r = {r} is inside the inner radius c5 = {c5}", locus="r <= c5")
    W = np.cbrt(w0)
    dW = r**2 / W**2
    M = c5**3 * (2 * r**3 - c5**3) / W**4 + 2 * c6 * W + c7 * r**3 * W
    if M < 0:
        raise DomainError(f"radicand of f is negative at r = {r}", locus="negative radicand")
    w = W**2 / r**2
    dw = 2 / W - 2 * W**2 / r**3
    f = np.sqrt(M) / r**2
    dM = (
        6 * c5**3 * r**2 / W**4
        - 4 * c5**3 * (2 * r**3 - c5**3) * dW / W**5
        + 2 * c6 * dW
        + 3 * c7 * r**2 * W
        + c7 * r**3 * dW
    )
    df = f * (dM / (2 * M) - 2 / r) if M > 0 else 0.0
    g44 = 1 / w**3 - r**2 * f**2 / w
    dg44 = -3 * dw / w**4 - (2 * r * f**2 + 2 * r**2 * f * df) / w + r**2 * f**2 * dw / w**2
    return (w, f, g44), (dw, df, dg44)


def rectilinear_g44_closed_form(params, r):
    return 1 - (2 * params.c6 + r**3 * params.c7) / np.cbrt(r**3 - params.c5**3)


def rectilinear_spherical(params):
    """The spherically symmetric solution written in rectilinear space coordinates.

    ``g_ii = -w(r)``, ``g_i4 = f(r) x_i`` and ``g44 = 1/w^3 - r^2 f^2 / w``.
    """

    def singular(x):
        r = np.linalg.norm(x[:3])
        if r <= params.c5 * (1 + LOCUS_RTOL) or r == 0:
            return f"inner radius r <= c5 = {params.c5}"
        return None

    def metric(x):
        r = np.linalg.norm(x[:3])
        (w, f, g44), _ = rectilinear_components(params, r)
        g = np.zeros((4, 4))
        g[:3, :3] = -w * np.eye(3)
        g[:3, 3] = g[3, :3] = f * x[:3]
        g[3, 3] = g44
        return g

    def d_metric(x):
        xs = x[:3]
        r = np.linalg.norm(xs)
        (w, f, g44), (dw, df, dg44) = rectilinear_components(params, r)
        dg = np.zeros((4, 4, 4))
        for c in range(3):
            n = xs[c] / r
            dg[c, :3, :3] = -dw * n * np.eye(3)
            col = df * n * xs
            col[c] += f
            dg[c, :3, 3] = dg[c, 3, :3] = col
            dg[c, 3, 3] = dg44 * n
        return dg

    r_hi = max(2.0 * params.c5, 2.0) + 8.0
    return MetricField(
        name="rectilinear",
        dim=4,
        eval=metric,
        d_eval=d_metric,
        chart="rectilinear",
        singular=singular,
        params={"c5": params.c5, "c6": params.c6, "c7": params.c7},
        domain=([-r_hi, -r_hi, -r_hi, -10.0], [r_hi, r_hi, r_hi, 10.0]),
        guard=lambda x: max(2.0 * params.c5, 1.0) <= np.linalg.norm(x[:3]) <= r_hi,
    )
