"""
Closed-form curvature of the spherically symmetric solution and an
entry-by-entry comparison against the numeric curvature engine.

The two-index curvature matrices of ``general_spherical`` are spanned by six
coefficients ``w0..w5`` of the radius. Two variants are provided:

``"printed"``
    the coefficients exactly as they are usually quoted for this solution;
``"corrected"``
    the coefficients that the numeric curvature of the metric actually
    satisfies. They differ in the sign of the ``c7`` term of ``w2``, the
    ``c7`` weight inside ``w3`` and in ``w5``, which equals ``w3``.
"""

from dataclasses import dataclass

import numpy as np

from .. import geometry
from .spherical import general_spherical

__all__ = [
    "VARIANTS",
    "w_coefficients",
    "spherical_curvature_matrices",
    "ErratumEntry",
    "ErratumReport",
    "curvature_erratum_report",
]

VARIANTS = ("printed", "corrected")
PAIRS = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))


def _sqrt_or_nan(v):
    return np.sqrt(v) if v >= 0 else np.nan


def w_coefficients(params, x3, variant="corrected"):
    """``(w0, w1, w2, w3, w4, w5)`` at radius ``x3``; NaN marks a negative radicand."""
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}")
    c5, c6, c7, c8 = params.c5, params.c6, params.c7, params.c8
    w0 = x3**3 - c5**3
    W = np.cbrt(w0)
    w1 = (-c6 + 3 * w0 * c7) / (3 * W)
    w4 = (2 * c6 - 3 * (W - w0 * c7)) / (3 * w0)
    if variant == "printed":
        w2 = (-2 * c6 + 3 * w0 * c7) / (3 * W)
        rad3 = 2 * x3**3 * c5**3 - c5**6 + 2 / 3 * (W**5 * c6 + W**8 * c7)
        w3 = c8 * _sqrt_or_nan(rad3) / (x3 * W**4)
        W2 = W * W
        rad5 = (
            -2 / 3 * c5**3 * W2 * c6
            + x3**6 * W2 * c7
            + c5**6 * (-1 + W2 * c7 + x3**3 * (2 / 3 * W2 * c6 + 2 * c5**3 * (1 - W2 * c7)))
        )
        w5 = c8 / (x3 * W**4) * _sqrt_or_nan(rad5)
    else:
        w2 = (-2 * c6 - 3 * w0 * c7) / (3 * W)
        rad3 = 2 * x3**3 * c5**3 - c5**6 + 2 / 3 * W**5 * c6 + W**8 * c7
        w3 = c8 * _sqrt_or_nan(rad3) / (x3 * W**4)
        w5 = w3
    return w0, w1, w2, w3, w4, w5


def spherical_curvature_matrices(params, x, variant="corrected"):
    """``sigma_ab[a, b]`` assembled from the ``w`` coefficients, antisymmetric in ``(a, b)``."""
    x = np.asarray(x, dtype=float)
    _, w1, w2, w3, w4, w5 = w_coefficients(params, x[2], variant)
    s2 = np.sin(x[0]) ** 2
    r2 = 1.0 / x[2] ** 2
    blocks = {
        (0, 1): w2 * np.array([[0, -s2, 0, 0], [1, 0, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0]]),
        (0, 2): w1 * np.array([[0, 0, r2, w3], [0, 0, 0, 0], [-1, 0, 0, 0], [0, 0, 0, 0]]),
        (0, 3): w1 * np.array([[0, 0, w3, w4], [0, 0, 0, 0], [0, 0, 0, 0], [-1, 0, 0, 0]]),
        (1, 2): w1 * np.array([[0, 0, 0, 0], [0, 0, r2, w3], [0, -s2, 0, 0], [0, 0, 0, 0]]),
        (1, 3): w1 * np.array([[0, 0, 0, 0], [0, 0, w3, w4], [0, 0, 0, 0], [0, -s2, 0, 0]]),
        (2, 3): w2 * np.array([[0, 0, 0, 0], [0, 0, 0, 0], [0, 0, -w5, -w4], [0, 0, r2, w5]]),
    }
    out = np.zeros((4, 4, 4, 4))
    for (a, b), m in blocks.items():
        out[a, b] = m
        out[b, a] = -m
    return out


@dataclass(frozen=True)
class ErratumEntry:
    point: tuple
    pair: tuple
    entry: tuple
    numeric: float
    printed: float
    corrected: float

    @staticmethod
    def _rel(a, b):
        return abs(a - b) / max(abs(a), abs(b), 1e-300) if np.isfinite(b) else np.inf

    @property
    def printed_error(self):
        return self._rel(self.numeric, self.printed)

    @property
    def corrected_error(self):
        return self._rel(self.numeric, self.corrected)


@dataclass(frozen=True)
class ErratumReport:
    """Entries of the printed closed form that disagree with the numeric curvature."""

    params: object
    tolerance: float
    checked: int
    entries: tuple

    @property
    def irreconcilable(self):
        """Entries that neither variant reproduces."""
        return tuple(e for e in self.entries if e.corrected_error > self.tolerance)

    def to_text(self):
        p = self.params
        lines = [
            "Curvature closed-form erratum report",
            f"parameters: c5={p.c5} c6={p.c6} c7={p.c7} c8={p.c8}",
            f"relative tolerance: {self.tolerance:g}; entries compared: {self.checked}",
            f"entries where the printed form disagrees: {len(self.entries)}",
            f"entries no variant reproduces: {len(self.irreconcilable)}",
            "",
            "x1,x3,pair,entry,numeric,printed,corrected,printed_rel_err,corrected_rel_err",
        ]
        for e in self.entries:
            lines.append(
                f"{e.point[0]:.6g},{e.point[2]:.6g},sigma^{e.pair[0] + 1}{e.pair[1] + 1},"
                f"({e.entry[0] + 1};{e.entry[1] + 1}),{e.numeric:.12g},{e.printed:.12g},{e.corrected:.12g},"
                f"{e.printed_error:.3g},{e.corrected_error:.3g}"
            )
        return "\n".join(lines) + "\n"


def curvature_erratum_report(params, points, tol=1e-6):
    """Compare numeric ``sigma^{ab}`` with both closed-form variants at ``points``.

    An entry counts as matching when its relative error, measured against
    the larger of the two magnitudes or the largest entry of that matrix
    when both are tiny, is below ``tol``.
    """
    field = general_spherical(params)
    entries = []
    checked = 0
    for x in points:
        x = np.asarray(x, dtype=float)
        numeric = geometry.riemann(field, x).sigma_ab
        printed = spherical_curvature_matrices(params, x, "printed")
        corrected = spherical_curvature_matrices(params, x, "corrected")
        for a, b in PAIRS:
            floor = max(np.max(np.abs(numeric[a, b])), 1e-300)
            for i in range(4):
                for j in range(4):
                    n, p, c = numeric[a, b, i, j], printed[a, b, i, j], corrected[a, b, i, j]
                    if max(abs(n), abs(c)) < tol * floor and abs(p) < tol * floor:
                        continue
                    checked += 1
                    scale = max(abs(n), abs(p) if np.isfinite(p) else 0.0, tol * floor)
                    if not np.isfinite(p) or abs(n - p) > tol * scale:
                        entries.append(ErratumEntry(tuple(x), (a, b), (i, j), float(n), float(p), float(c)))
    return ErratumReport(params=params, tolerance=tol, checked=checked, entries=tuple(entries))
