"""
Curvature engine.

A :class:`MetricField` maps a coordinate point to a symmetric metric
matrix ``g(x)``. From it this module builds the one-index Christoffel
matrices, the two-index curvature matrices, the Ricci matrix and a suite of
algebraic and differential identity checks.

Array layout, all indices 0-based:

* ``dg[c, a, b]``        derivative of ``g[a, b]`` along axis ``c``
* ``first_kind[c, a, b]``  (gamma^c)_ab = Gamma_{a, c b}
* ``second_kind[m, i, j]`` (sigma^m)_ij = Gamma^i_{m j}
* ``sigma_ab[a, b, i, j]`` (sigma^{ab})_ij = R^i_{j a b}
* ``gamma_ab[a, b, i, j]`` (g sigma^{ab})_ij = R_{i j a b}

The Ricci matrix is the contraction ``R[m, n] = sum_b sigma_ab[m, b, b, n]``.
With this ordering a space of constant density ``rho`` satisfies
``R = rho * g``.
"""

from dataclasses import dataclass, field as dc_field
from typing import Callable, Mapping, Optional

import numpy as np

from . import matcore

__all__ = [
    "DomainError",
    "NumericalQualityError",
    "MetricField",
    "ChristoffelSet",
    "CurvatureBundle",
    "IdentityCheck",
    "IdentityReport",
    "FieldEquationCheck",
    "EigenSplit",
    "central_difference",
    "metric_derivatives",
    "derivative_mismatch",
    "christoffel",
    "christoffel_index",
    "riemann",
    "ricci",
    "ricci_direct",
    "verify_field_equation",
    "identity_suite",
    "eigen_split",
    "sample_points",
]

FIRST_STEP = 1e-5
SIGMA_STEP = 1e-4
OUTER_STEP = 1e-3
SYMMETRY_RTOL = 1e-12
RICCI_ASYMMETRY_TOL = 1e-6
IDENTITY_TOL = 1e-7


class DomainError(ValueError):
    """A point lies on or inside a metric's excluded locus."""

    def __init__(self, message, locus=None):
        super().__init__(message)
        self.locus = locus


class NumericalQualityError(ArithmeticError):
    """Finite differences produced a result that fails a sanity check."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


@dataclass(frozen=True)
class MetricField:
    """A named metric model.

    ``eval(x)`` returns the metric matrix and ``d_eval(x)`` (optional)
    returns the stacked first derivatives ``dg[c] = d g / d x_c``.
    ``singular(x)`` returns a short description of the excluded locus that
    contains ``x``, or ``None`` for a regular point. ``domain`` is a
    ``(low, high)`` box used for random sampling and ``guard`` an optional
    extra predicate that drawn samples must satisfy (typically keeping
    finite-difference stencils clear of a singular locus).
    """

    name: str
    dim: int
    eval: Callable
    d_eval: Optional[Callable] = None
    chart: str = "rectilinear"
    singular: Optional[Callable] = None
    params: Mapping = dc_field(default_factory=dict)
    domain: Optional[tuple] = None
    guard: Optional[Callable] = None

    def check_point(self, x):
        x = matcore.as_vector(x, "point")
        if x.size != self.dim:
            raise matcore.DimensionError(f"{self.name} expects a point of dimension {self.dim}, got {x.size}")
        if self.singular is not None:
            reason = self.singular(x)
            if reason:
                raise DomainError(f"{self.name}: point {x.tolist()} is on the singular locus ({reason})", locus=reason)
        return x

    def raw(self, x):
        """Metric matrix without the locus check, used on stencil points."""
        g = np.asarray(self.eval(np.asarray(x, dtype=float)), dtype=float)
        if g.shape != (self.dim, self.dim) or not np.all(np.isfinite(g)):
            raise NumericalQualityError(f"{self.name}: metric evaluation failed at {np.asarray(x).tolist()}")
        return g

    def metric(self, x):
        x = self.check_point(x)
        g = self.raw(x)
        if np.max(np.abs(g - g.T)) > SYMMETRY_RTOL * (1.0 + np.max(np.abs(g))):
            raise NumericalQualityError(f"{self.name}: metric is not symmetric at {x.tolist()}")
        return g

    def derivatives(self, x):
        return metric_derivatives(self, x)


def _steps(x, rel):
    return rel * np.maximum(1.0, np.abs(x))


def central_difference(fn, x, axis, h):
    """Five-point central difference of an array-valued ``fn`` along ``axis``."""
    e = np.zeros_like(x)
    e[axis] = h
    return (-fn(x + 2 * e) + 8 * fn(x + e) - 8 * fn(x - e) + fn(x - 2 * e)) / (12 * h)


def _gradient(fn, x, rel):
    h = _steps(x, rel)
    return np.stack([central_difference(fn, x, c, h[c]) for c in range(x.size)])


def metric_derivatives(field, x, force_fd=False):
    """Stacked ``dg[c, a, b]``, analytic when the field provides it."""
    x = np.asarray(x, dtype=float)
    if field.d_eval is not None and not force_fd:
        dg = np.asarray(field.d_eval(x), dtype=float)
        if dg.shape != (field.dim,) * 3 or not np.all(np.isfinite(dg)):
            raise NumericalQualityError(f"{field.name}: derivative evaluation failed at {x.tolist()}")
        return dg
    return _gradient(field.raw, x, FIRST_STEP)


def derivative_mismatch(field, x):
    """Largest gap between analytic and finite-difference derivatives.

    Measured relative to the largest derivative entry (or 1 when all
    derivatives are tiny).
    """
    if field.d_eval is None:
        raise ValueError(f"{field.name} has no analytic derivatives")
    x = field.check_point(x)
    exact = metric_derivatives(field, x)
    approx = metric_derivatives(field, x, force_fd=True)
    return float(np.max(np.abs(exact - approx)) / max(1.0, np.max(np.abs(exact))))


@dataclass(frozen=True)
class ChristoffelSet:
    first_kind: np.ndarray
    second_kind: np.ndarray
    point: np.ndarray
    metric: np.ndarray


def _christoffel_arrays(field, x):
    g = field.raw(x)
    dg = metric_derivatives(field, x)
    first = 0.5 * (dg + np.einsum("bac->cab", dg) - np.einsum("abc->cab", dg))
    n = field.dim
    # one factorization for all m: columns of the stacked right-hand side are first[m][:, b]
    stacked = matcore.linear_solve(g, first.transpose(1, 0, 2).reshape(n, n * n))
    second = stacked.reshape(n, n, n).transpose(1, 0, 2)
    return g, first, second


def christoffel(field, x):
    """Christoffel matrices of the first and second kind at ``x``."""
    x = field.check_point(x)
    g, first, second = _christoffel_arrays(field, x)
    return ChristoffelSet(first_kind=first, second_kind=second, point=x, metric=g)


def christoffel_index(field, x):
    """``Gamma[i, a, b] = Gamma^i_{ab}`` from the textbook index formula.

    Kept separate from :func:`christoffel` so that the two Ricci routes do
    not share code.
    """
    x = np.asarray(x, dtype=float)
    ginv = matcore.mat_inverse(field.raw(x))
    dg = metric_derivatives(field, x)
    # lowered[r, a, b] = d_a g_rb + d_b g_ra - d_r g_ab
    lowered = np.einsum("arb->rab", dg) + np.einsum("bra->rab", dg) - dg
    return 0.5 * np.einsum("ir,rab->iab", ginv, lowered)


@dataclass(frozen=True)
class CurvatureBundle:
    """Curvature at one point. ``ricci``, ``scalar`` and ``eigen`` are
    ``None`` when only :func:`riemann` has been run."""

    point: np.ndarray
    metric: np.ndarray
    christoffel: ChristoffelSet
    sigma_ab: np.ndarray
    gamma_ab: np.ndarray
    ricci: Optional[np.ndarray] = None
    ricci_asymmetry: Optional[float] = None
    scalar: Optional[float] = None
    eigen: Optional[matcore.EigenSet] = None

    @property
    def riemann_lower(self):
        """``L[m, k, a, b] = R_{mkab}``."""
        return np.einsum("abmk->mkab", self.gamma_ab)


def _sigma_field(field):
    return lambda y: _christoffel_arrays(field, y)[2]


def _curvature_arrays(field, x):
    g, first, sigma = _christoffel_arrays(field, x)
    dsigma = _gradient(_sigma_field(field), x, SIGMA_STEP)
    # sigma_ab[a, b] = d_a sigma^b - d_b sigma^a + sigma^a sigma^b - sigma^b sigma^a
    prod = np.einsum("aij,bjk->abik", sigma, sigma)
    sigma_ab = dsigma - np.einsum("abij->baij", dsigma) + prod - np.einsum("abij->baij", prod)
    gamma_ab = np.einsum("ij,abjk->abik", g, sigma_ab)
    return g, first, sigma, sigma_ab, gamma_ab


def riemann(field, x):
    """Two-index curvature matrices ``sigma^{ab}`` and ``gamma^{ab}``."""
    x = field.check_point(x)
    g, first, sigma, sigma_ab, gamma_ab = _curvature_arrays(field, x)
    cs = ChristoffelSet(first_kind=first, second_kind=sigma, point=x, metric=g)
    return CurvatureBundle(point=x, metric=g, christoffel=cs, sigma_ab=sigma_ab, gamma_ab=gamma_ab)


def _ricci_from(sigma_ab):
    return np.einsum("mbbn->mn", sigma_ab)


def _checked_ricci(field, x, sigma_ab):
    raw = _ricci_from(sigma_ab)
    scale = 1.0 + np.max(np.abs(raw))
    asym = float(np.max(np.abs(raw - raw.T)) / scale)
    if asym > RICCI_ASYMMETRY_TOL:
        raise NumericalQualityError(
            f"{field.name}: Ricci matrix asymmetry {asym:.3g} exceeds {RICCI_ASYMMETRY_TOL:g} at {x.tolist()}",
            diagnostics={"asymmetry": asym, "ricci": raw},
        )
    return 0.5 * (raw + raw.T), asym


def ricci(field, x):
    """Complete curvature bundle including Ricci matrix and its eigenvalues."""
    b = riemann(field, x)
    R, asym = _checked_ricci(field, b.point, b.sigma_ab)
    scalar = matcore.trace(matcore.linear_solve(b.metric, R))
    eig = matcore.generalized_eigenvalues(R, b.metric)
    return CurvatureBundle(
        point=b.point,
        metric=b.metric,
        christoffel=b.christoffel,
        sigma_ab=b.sigma_ab,
        gamma_ab=b.gamma_ab,
        ricci=R,
        ricci_asymmetry=asym,
        scalar=scalar,
        eigen=eig,
    )


def ricci_direct(field, x):
    """Ricci matrix from derivatives of the Christoffel symbols directly:

    R_mn = d_m G^b_bn - d_b G^b_mn + G^b_ml G^l_bn - G^b_bl G^l_mn
    """
    x = field.check_point(x)
    G = christoffel_index(field, x)
    h = _steps(x, SIGMA_STEP)
    dG = np.empty((x.size,) + G.shape)
    for c in range(x.size):
        # Richardson-extrapolated three-point differences
        e = np.zeros_like(x)
        e[c] = h[c]
        wide = (christoffel_index(field, x + 2 * e) - christoffel_index(field, x - 2 * e)) / (4 * h[c])
        central3 = (christoffel_index(field, x + e) - christoffel_index(field, x - e)) / (2 * h[c])
        dG[c] = (4 * central3 - wide) / 3
    return (
        np.einsum("mbbn->mn", dG)
        - np.einsum("bbmn->mn", dG)
        + np.einsum("bml,lbn->mn", G, G)
        - np.einsum("bbl,lmn->mn", G, G)
    )


@dataclass(frozen=True)
class FieldEquationCheck:
    rho: float
    max_residual: float


def verify_field_equation(field, x):
    """Best-fit density ``rho = tr(inv(g) R) / n`` and the scaled residual
    ``||R - rho g||_inf / (1 + ||R||_inf)``."""
    b = ricci(field, x)
    rho = b.scalar / field.dim
    R = b.ricci
    res = np.max(np.abs(R - rho * b.metric)) / (1.0 + np.max(np.abs(R)))
    return FieldEquationCheck(rho=float(rho), max_residual=float(res))


@dataclass(frozen=True)
class IdentityCheck:
    name: str
    violation: float
    tolerance: float

    @property
    def passed(self):
        return bool(self.violation <= self.tolerance)


@dataclass(frozen=True)
class IdentityReport:
    point: np.ndarray
    checks: tuple

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    @property
    def worst(self):
        return max(c.violation for c in self.checks)

    def __getitem__(self, name):
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


IDENTITY_NAMES = (
    "P1 antisymmetry R_mkab = -R_kmab",
    "P2 cyclic R_rkmn + R_rmnk + R_rnkm = 0",
    "P3 pair symmetry R_mkab = R_abmk",
    "P5 Ricci symmetry",
    "P6 contracted Bianchi",
    "P7 second Bianchi",
)


def identity_suite(field, x, tol=IDENTITY_TOL, outer_step=OUTER_STEP):
    """Algebraic and differential identities of the curvature at ``x``.

    Every violation is scaled by ``1 + max|R_mkab|``. The differential
    checks differentiate the curvature once more by finite differences
    with step ``outer_step * max(1, |x_i|)``.
    """
    x = field.check_point(x)
    g, _, sigma, sigma_ab, gamma_ab = _curvature_arrays(field, x)
    n = x.size
    L = np.einsum("abmk->mkab", gamma_ab)
    raw_ricci = _ricci_from(sigma_ab)
    scale = 1.0 + np.max(np.abs(L))

    p1 = np.max(np.abs(L + np.einsum("mkab->kmab", L)))
    p2 = np.max(np.abs(L + np.einsum("rmnk->rkmn", L) + np.einsum("rnkm->rkmn", L)))
    p3 = np.max(np.abs(L - np.einsum("mkab->abmk", L)))
    p5 = np.max(np.abs(raw_ricci - raw_ricci.T))

    def lowered_and_ricci(y):
        _, _, _, s_ab, gm_ab = _curvature_arrays(field, y)
        R = _ricci_from(s_ab)
        return np.concatenate([np.einsum("abmk->mkab", gm_ab).ravel(), (0.5 * (R + R.T)).ravel()])

    h = _steps(x, outer_step)
    d = np.stack([central_difference(lowered_and_ricci, x, c, h[c]) for c in range(n)])
    dL = d[:, : n**4].reshape((n,) * 5)
    dR = d[:, n**4 :].reshape((n,) * 3)

    # Gam[s, e, m] = Gamma^s_{em}
    Gam = np.einsum("msk->smk", sigma)
    ginv = matcore.mat_inverse(g)
    R = 0.5 * (raw_ricci + raw_ricci.T)

    nabla_R = dR - np.einsum("slm,sn->lmn", Gam, R) - np.einsum("sln,ms->lmn", Gam, R)
    div = np.einsum("lm,lmn->n", ginv, nabla_R)
    # d_c (g^mn R_mn), using d inv(g) = -inv(g) dg inv(g)
    dg = metric_derivatives(field, x)
    dscalar = np.einsum("mn,cmn->c", ginv, dR) - np.einsum("mp,cpq,qn,mn->c", ginv, dg, ginv, R)
    p6 = np.max(np.abs(div - 0.5 * dscalar))

    nabla_L = (
        dL
        - np.einsum("sem,skab->emkab", Gam, L)
        - np.einsum("sek,msab->emkab", Gam, L)
        - np.einsum("sea,mksb->emkab", Gam, L)
        - np.einsum("seb,mkas->emkab", Gam, L)
    )
    bianchi = nabla_L + np.einsum("amkbe->emkab", nabla_L) + np.einsum("bmkea->emkab", nabla_L)
    p7 = np.max(np.abs(bianchi))

    values = (p1, p2, p3, p5, p6, p7)
    checks = tuple(IdentityCheck(name, float(v / scale), tol) for name, v in zip(IDENTITY_NAMES, values))
    return IdentityReport(point=x, checks=checks)


@dataclass(frozen=True)
class EigenSplit:
    mu: tuple
    gaps: tuple

    @property
    def max_gap(self):
        return max((abs(v) for v in self.gaps), default=0.0)


def eigen_split(field, x):
    """Eigenvalues of ``inv(g) R`` and every pairwise gap ``mu_i - mu_j``, i < j."""
    mu = ricci(field, x).eigen.values
    gaps = tuple(mu[i] - mu[j] for i in range(len(mu)) for j in range(i + 1, len(mu)))
    return EigenSplit(mu=tuple(mu), gaps=gaps)


def sample_points(field, rng, n, max_tries=10000):
    """Draw ``n`` regular points uniformly from the field's sampling box."""
    if field.domain is None:
        raise ValueError(f"{field.name} declares no sampling domain")
    low, high = (np.asarray(b, dtype=float) for b in field.domain)
    points = []
    for _ in range(max_tries):
        if len(points) == n:
            break
        x = rng.uniform(low, high)
        if field.guard is not None and not field.guard(x):
            continue
        try:
            field.metric(x)
        except (DomainError, NumericalQualityError, matcore.SingularMatrixError):
            continue
        points.append(x)
    if len(points) < n:
        raise DomainError(f"{field.name}: could not draw {n} regular points from its domain")
    return np.array(points)
