"""
Small dense linear algebra for the metric and curvature matrices.

Matrices are plain square ``numpy`` arrays. Every public function checks
shape and finiteness on entry so that bad input fails here and not three
calls later inside a curvature computation.
"""

import warnings
from dataclasses import dataclass
from itertools import combinations

import numpy as np
import scipy.linalg

__all__ = [
    "DimensionError",
    "SingularMatrixError",
    "EigenError",
    "EigenSet",
    "as_square",
    "as_vector",
    "mat_mul",
    "mat_vec",
    "transpose",
    "trace",
    "lu",
    "det",
    "mat_inverse",
    "linear_solve",
    "charpoly",
    "polynomial_roots",
    "generalized_eigenvalues",
]

SINGULAR_RTOL = 1e-13
IMAG_RTOL = 1e-8
CLUSTER_RTOL = 5e-2


class DimensionError(ValueError):
    """Operands have incompatible or invalid shapes."""


class SingularMatrixError(ValueError):
    """Raised when a matrix is numerically singular; carries the determinant."""

    def __init__(self, message, det=0.0):
        super().__init__(message)
        self.det = det


class EigenError(ValueError):
    """The pencil produced eigenvalues with imaginary parts above tolerance."""

    def __init__(self, message, eigenset=None):
        super().__init__(message)
        self.eigenset = eigenset


@dataclass(frozen=True)
class EigenSet:
    """Real eigenvalues of ``inv(g) @ R`` sorted in descending order.

    ``residual`` is the largest ``min ||(M - mu I) v||`` over unit ``v`` for
    each distinct value, and ``complex_discarded`` the largest imaginary part
    that was dropped when a root was declared real.
    """

    values: tuple
    residual: float
    complex_discarded: float

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def __getitem__(self, i):
        return self.values[i]


def as_square(a, name="matrix"):
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise DimensionError(f"{name} must be a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} has non-finite entries")
    return a


def as_vector(v, name="vector"):
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.shape[0] < 1:
        raise DimensionError(f"{name} must be a non-empty 1-d array, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} has non-finite entries")
    return v


def mat_mul(a, b):
    a = as_square(a, "a")
    b = as_square(b, "b")
    if a.shape != b.shape:
        raise DimensionError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def mat_vec(a, v):
    a = as_square(a)
    v = as_vector(v)
    if a.shape[1] != v.shape[0]:
        raise DimensionError(f"cannot multiply {a.shape} by vector of length {v.shape[0]}")
    return a @ v


def transpose(a):
    return as_square(a).T.copy()


def trace(a):
    return float(np.trace(as_square(a)))


def lu(a):
    """Pivoted LU factors ``(lu, piv)`` as returned by LAPACK getrf."""
    a = as_square(a)
    # exactly singular input makes getrf warn; callers inspect the diagonal
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        return scipy.linalg.lu_factor(a, check_finite=False)


def _det_from_lu(factors):
    lu_, piv = factors
    sign = -1.0 if np.count_nonzero(piv != np.arange(piv.size)) % 2 else 1.0
    return sign * float(np.prod(np.diag(lu_)))


def det(a):
    """Determinant through LU with partial pivoting."""
    return _det_from_lu(lu(a))


def _singular_scale(a):
    # Hadamard's bound: |det a| <= prod of row norms
    return float(np.prod(np.linalg.norm(a, axis=1)))


def _checked_lu(a):
    a = as_square(a)
    factors = lu(a)
    d = _det_from_lu(factors)
    scale = _singular_scale(a)
    if scale == 0.0 or abs(d) <= SINGULAR_RTOL * scale:
        raise SingularMatrixError(f"matrix is singular (det={d:.6g})", det=d)
    return factors


def linear_solve(a, b):
    """Solve ``a x = b`` for a vector or matrix right-hand side."""
    factors = _checked_lu(a)
    b = np.asarray(b, dtype=float)
    if b.shape[0] != factors[0].shape[0]:
        raise DimensionError(f"right-hand side of length {b.shape[0]} does not match {factors[0].shape}")
    return scipy.linalg.lu_solve(factors, b, check_finite=False)


def mat_inverse(a):
    a = as_square(a)
    return linear_solve(a, np.eye(a.shape[0]))


def charpoly(m):
    """Characteristic polynomial of ``m`` by Faddeev-LeVerrier.

    Returns coefficients ``c`` with ``det(t I - m) = sum c[k] t**(n-k)``,
    so ``c[0] == 1``.
    """
    m = as_square(m)
    n = m.shape[0]
    c = np.zeros(n + 1)
    c[0] = 1.0
    acc = np.zeros_like(m)
    eye = np.eye(n)
    for k in range(1, n + 1):
        acc = m @ acc + c[k - 1] * eye
        c[k] = -np.trace(m @ acc) / k
    return c


def _polyval(c, z):
    out = 0j
    for ck in c:
        out = out * z + ck
    return out


def _polyder(c, order=1):
    c = np.asarray(c, dtype=complex)
    for _ in range(order):
        n = c.size - 1
        c = c[:-1] * np.arange(n, 0, -1)
    return c


def polynomial_roots(c, tol=1e-15, max_iter=2000):
    """All complex roots of a monic-normalisable polynomial by Durand-Kerner."""
    c = np.asarray(c, dtype=complex)
    c = c / c[0]
    n = c.size - 1
    if n == 0:
        return np.zeros(0, dtype=complex)
    # Fujiwara's bound sets the starting circle
    radius = 2.0 * max(abs(c[k]) ** (1.0 / k) for k in range(1, n + 1))
    radius = max(radius, 1e-300)
    z = radius * np.exp(2j * np.pi * (np.arange(n) + 0.25) / n) * (0.4 + 0.9j) / abs(0.4 + 0.9j)
    for _ in range(max_iter):
        shift = np.empty(n, dtype=complex)
        for i in range(n):
            others = z[i] - np.delete(z, i)
            denom = np.prod(others) if n > 1 else 1.0
            if denom == 0:
                denom = tol * radius
            shift[i] = _polyval(c, z[i]) / denom
        z = z - shift
        if np.max(np.abs(shift)) <= tol * max(radius, 1.0):
            break
    return z


def _refine(c, z0, multiplicity, iters=8):
    # a root of multiplicity k is a simple root of the (k-1)-th derivative
    dc = _polyder(c, multiplicity - 1)
    ddc = _polyder(dc)
    z = z0
    for _ in range(iters):
        d = _polyval(ddc, z)
        if d == 0:
            break
        step = _polyval(dc, z) / d
        if not np.isfinite(step):
            break
        z_new = z - step
        if abs(_polyval(dc, z_new)) > abs(_polyval(dc, z)):
            break
        z = z_new
    return z


def _split_group(c, ms, roots, width):
    """Resolve roots into ``(value, multiplicity)`` pairs.

    A subset spread over less than ``width`` is merged when ``ms - z I`` is
    numerically rank deficient at its polished mean ``z``; genuinely
    distinct roots (a complex pair, say) fail that test. Larger subsets are
    tried first.
    """
    eye = np.eye(ms.shape[0])
    remaining = list(range(roots.size))
    out = []
    while len(remaining) > 1:
        best = None
        for k in range(len(remaining), 1, -1):
            for subset in combinations(remaining, k):
                z = _refine(c, np.mean(roots[list(subset)]), k)
                spread = max(abs(roots[i] - z) for i in subset)
                if spread > width:
                    continue
                smin = np.linalg.svd(ms - z * eye, compute_uv=False)[-1]
                if smin <= 1e-3 * spread + 1e-13 and (best is None or spread < best[0]):
                    best = (spread, subset, z)
            if best is not None:
                break
        if best is None:
            break
        out.append((best[2], len(best[1])))
        remaining = [i for i in remaining if i not in best[1]]
    out.extend((_refine(c, roots[i], 1), 1) for i in remaining)
    return out


def generalized_eigenvalues(R, g, imag_rtol=IMAG_RTOL, cluster_rtol=CLUSTER_RTOL):
    """Eigenvalues of ``inv(g) @ R`` from its characteristic polynomial.

    Nearly coincident roots are pooled and polished on the derivative of
    matching order, which removes the conjugate spray that any polynomial
    root finder produces around a repeated root.
    """
    R = as_square(R, "R")
    g = as_square(g, "g")
    if R.shape != g.shape:
        raise DimensionError(f"R {R.shape} and g {g.shape} differ in shape")
    m = linear_solve(g, R)
    n = m.shape[0]
    scale = float(np.max(np.abs(m)))
    if scale == 0.0:
        return EigenSet(values=(0.0,) * n, residual=0.0, complex_discarded=0.0)
    # roots of the scaled matrix keep the polynomial coefficients O(1)
    c = charpoly(m / scale)
    roots = polynomial_roots(c)
    eye = np.eye(n)
    ms = m / scale
    candidates = _split_group(c, ms, roots, cluster_rtol)
    values = []
    discarded = 0.0
    bad = []
    for z, k in candidates:
        mu = z * scale
        if abs(mu.imag) > imag_rtol * (1.0 + abs(mu.real)):
            bad.append(complex(mu))
        discarded = max(discarded, abs(mu.imag))
        values.extend([float(mu.real)] * k)
    values = tuple(sorted(values, reverse=True))
    residual = max(float(np.linalg.svd(m - mu * eye, compute_uv=False)[-1]) for mu in set(values))
    result = EigenSet(values=values, residual=residual, complex_discarded=discarded)
    if bad:
        raise EigenError(f"non-real eigenvalues {bad}", eigenset=result)
    return result
