"""
Plane orbits and radial infall around a central mass.

Lengths are in any consistent unit; ``r_M = G M / c^2`` is the mass length.
Velocities ``beta`` are dimensionless (fractions of the speed of light).
"""

import csv
import io
import math
from dataclasses import dataclass
from importlib import resources

import numpy as np

from ..geometry import DomainError, NumericalQualityError
from ..metrics.spherical import SphericalSolutionParams, general_spherical
from ..metrics.units import mass_to_length
from .geodesic import GeodesicState, integrate_geodesic, rkf45

__all__ = [
    "MotionConstants",
    "OrbitSpec",
    "ExtremeVelocities",
    "RadialExtremum",
    "PlanetRecord",
    "PlanetRow",
    "DivergenceError",
    "orbit_constants",
    "four_velocity_general",
    "plane_orbit_velocity",
    "precession",
    "precession_numeric",
    "precession_geodesic",
    "orbit_rhs_weak",
    "orbit_rhs_general",
    "extreme_velocities",
    "schwarzschild_energy",
    "radial_velocity_schwarzschild",
    "radial_extremum",
    "weak_energy",
    "radial_velocity_weak",
    "load_planets",
    "bundled_planets",
    "planet_table",
    "ARCSEC_PER_RAD",
]

ARCSEC_PER_RAD = 180.0 / math.pi * 3600.0
DAYS_PER_CENTURY = 36525.0
RADICAND_RTOL = 1e-12
NORM_TOL = 1e-8


class DivergenceError(ArithmeticError):
    """The orbit did not return to perihelion within the search window."""


@dataclass(frozen=True)
class MotionConstants:
    """Integration constants of motion in a spherically symmetric field.

    ``c1`` and ``c2`` are angular constants (``c1 = 0`` for plane orbits),
    ``c3`` the sign of the radial velocity and ``c4`` the energy-like constant.
    """

    c1: float
    c2: float
    c3: int
    c4: float

    def __post_init__(self):
        if self.c3 not in (1, -1):
            raise ValueError(f"c3 must be +1 or -1, got {self.c3}")
        for name in ("c1", "c2", "c4"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")


@dataclass(frozen=True)
class OrbitSpec:
    """Plane orbit with perihelion ``p`` and aphelion ``a`` around mass length ``r_M``."""

    p: float
    a: float
    r_M: float

    def __post_init__(self):
        if not (0 < self.p <= self.a and math.isfinite(self.a)):
            raise ValueError(f"need 0 < p <= a, got p={self.p}, a={self.a}")
        if not self.r_M >= 0:
            raise ValueError(f"r_M must be non-negative, got {self.r_M}")
        if not self.p > 2 * self.r_M:
            raise DomainError(f"perihelion {self.p} is inside 2 r_M = {2 * self.r_M}", locus="x3 <= 2 r_M")
        if not self.f2_squared > 0:
            raise DomainError("f2 radicand is not positive: orbit too relativistic", locus="f2^2 <= 0")

    @property
    def _sum2(self):
        a, p = self.a, self.p
        return a * a + a * p + p * p

    @property
    def f2_squared(self):
        a, p, r = self.a, self.p, self.r_M
        return a * p * (a + p) - 2 * r * self._sum2

    @property
    def f2(self):
        return math.sqrt(self.f2_squared)

    @property
    def f3(self):
        a, p, r = self.a, self.p, self.r_M
        return math.sqrt((a + p) * (a - 2 * r) * (p - 2 * r))

    @property
    def f4(self):
        a, p, r = self.a, self.p, self.r_M
        return a * a * p * p * (a * a - p * p) + 4 * self._sum2 * r * (a * p * p - r * self._sum2)

    @property
    def f5(self):
        a, p, r = self.a, self.p, self.r_M
        return a * a * p * p * (a - p) * (a * p - 2 * r * (2 * a + p))

    def f1(self, x3):
        a, p, r = self.a, self.p, self.r_M
        if not (p <= x3 <= a):
            raise DomainError(f"radius {x3} outside the orbit [{p}, {a}]", locus="forbidden region")
        third = a * (p * x3 - 2 * r * (x3 + p)) - 2 * r * p * x3
        return math.sqrt((a - x3) * (x3 - p) * third)


def orbit_constants(spec):
    """``c1 = 0``, ``c2 = -a p sqrt(2 r_M) / f2``, ``c3 = +1``, ``c4 = f3 / f2``."""
    f2 = spec.f2
    return MotionConstants(c1=0.0, c2=-spec.a * spec.p * math.sqrt(2 * spec.r_M) / f2, c3=1, c4=spec.f3 / f2)


def _clamped_sqrt(value, scale, what):
    if value >= 0:
        return math.sqrt(value)
    if value >= -RADICAND_RTOL * scale:
        return 0.0
    raise DomainError(f"{what} radicand is negative ({value:.6g}): forbidden region", locus="forbidden region")


def four_velocity_general(source, consts, x):
    """Contravariant 4-velocity at ``x = (theta, phi, r, t)`` from the constants of motion.

    ``source`` is a :class:`SphericalSolutionParams` or any spherically
    symmetric :class:`MetricField` whose angular block is ``-H (1, sin^2)``.
    The radial component is found from normalization after eliminating
    ``u4`` through ``c4 = g34 u3 + g44 u4``.
    """
    field = general_spherical(source) if isinstance(source, SphericalSolutionParams) else source
    x = np.asarray(x, dtype=float)
    g = field.metric(x)
    g11, g22, g33, g34, g44 = g[0, 0], g[1, 1], g[2, 2], g[2, 3], g[3, 3]
    c1, c2, c3, c4 = consts.c1, consts.c2, consts.c3, consts.c4
    cot = math.cos(x[0]) / math.sin(x[0])
    ang = _clamped_sqrt(c1 * c1 - (c2 * cot) ** 2, c1 * c1 + c2 * c2, "angular")
    u1 = -ang / g11
    u2 = -c2 / g22
    areal = -g11
    D = g33 * g44 - g34 * g34
    load = g44 * (1 + (c1 * c1 + c2 * c2) / areal)
    rad = (c4 * c4 - load) / -D
    u3 = c3 * _clamped_sqrt(rad, (c4 * c4 + abs(load)) / abs(D), "radial")
    u4 = (c4 - g34 * u3) / g44
    u = np.array([u1, u2, u3, u4])
    norm = float(u @ g @ u)
    if abs(norm - 1.0) > NORM_TOL:
        raise NumericalQualityError(f"4-velocity normalization {norm!r} differs from 1", diagnostics={"norm": norm})
    return u


def plane_orbit_velocity(spec, x3, geometry="weak", c3=1):
    """4-velocity on the equator of a plane orbit in factored form.

    The radial component ``sqrt(2 r_M) f1 / (f2 x3^(3/2))`` vanishes exactly
    at both turning points. ``geometry`` is ``"weak"`` or ``"schwarzschild"``;
    they differ only in ``u4``.
    """
    if c3 not in (1, -1):
        raise ValueError("c3 must be +1 or -1")
    consts = orbit_constants(spec)
    r, f2 = spec.r_M, spec.f2
    u2 = consts.c2 / (x3 * x3)
    u3 = c3 * math.sqrt(2 * r) * spec.f1(x3) / (f2 * x3**1.5)
    g44 = 1 - 2 * r / x3
    if geometry == "weak":
        u4 = (consts.c4 + math.sqrt(2 * r / x3) * u3) / g44
    elif geometry == "schwarzschild":
        u4 = consts.c4 / g44
    else:
        raise ValueError(f"unknown geometry {geometry!r}")
    return np.array([0.0, u2, u3, u4])


def precession(spec):
    """Perihelion advance per revolution in radians, ``3 pi r_M f4 / f5``."""
    if spec.a == spec.p:
        raise ValueError("circular orbit (a = p): the perihelion is not defined and f5 = 0")
    f5 = spec.f5
    if f5 == 0:
        raise ValueError("f5 = 0: degenerate orbit")
    return 3 * math.pi * spec.r_M * spec.f4 / f5


def orbit_rhs_weak(k, c2, r_M):
    """``d2k/dphi2 = -k + 3 k^2 r_M + r_M / c2^2`` with ``k = 1 / x3``."""
    return -k + 3 * k * k * r_M + r_M / (c2 * c2)


def orbit_rhs_general(k, c2, c4, params):
    """Orbit equation ``d2k/dphi2`` for the general spherical solution.

    With ``d = (1/k^3 - c5^3)^(2/3)`` read as a scalar throughout; for
    ``c5 = c7 = 0`` and ``c6 = 3 r_M`` this reduces to :func:`orbit_rhs_weak`.
    """
    c5, c6, c7 = params.c5, params.c6, params.c7
    c53 = c5**3
    base = 1 / k**3 - c53
    if base <= 0:
        raise DomainError("radius inside the moving-mass core", locus="x3^3 <= c5^3")
    d = base ** (2 / 3)
    A = (1 - k**3 * c53) ** (2 / 3)
    cc = c2 * c2
    t = (
        -3 * k**2 * cc
        - 3 * d * A * c7
        + 3 * k**5 * cc * (d * c6 + c53 * (5 - 4 * d * c7))
        + 4 * k**8 * cc * c53 * (-2 * d * c6 + 3 * c53 * (-1 + d * c7))
        + 4 * k**6 * c53 * A * (-2 * d * c6 + 3 * c53 * (-1 + c4 * c4 + d * c7))
        + k**3 * A * (d * c6 - 3 * c53 * (-4 + 4 * c4 * c4 + 3 * d * c7))
    )
    return t / (3 * k * cc)


def precession_numeric(spec, rtol=1e-12, atol=1e-14):
    """Perihelion advance per revolution by integrating the orbit equation.

    Works with ``K = p k`` from the perihelion (``K = 1``, ``K' = 0``) and
    locates the next ``+ -> -`` sign change of ``K'`` by bisection on the
    step length to 1e-12 in the azimuth.
    """
    if spec.a == spec.p:
        raise ValueError("circular orbit (a = p): the perihelion is not defined")
    q = spec.r_M / spec.p
    # p r_M / c2^2 written without dividing by r_M
    forcing = spec.p * spec.f2_squared / (2 * spec.a**2 * spec.p**2)

    def f(t, y):
        K, dK = y
        return np.array([dK, -K + 3 * K * K * q + forcing])

    limit = 4 * math.pi
    # the next perihelion is the first falling zero of K' past the aphelion; the
    # gate value is negative so that opening the gate is never a falling crossing
    event = (lambda t, y: y[1] if t > math.pi / 2 else -1.0, -1, True)
    _, _, status, reason, _, _, hits = rkf45(f, 0.0, [1.0, 0.0], limit, rtol=rtol, atol=atol, h0=1e-3, events=[event])
    if not hits:
        raise DivergenceError(f"no return to perihelion within 4 pi ({status} {reason})".strip())
    return hits[0][1] - 2 * math.pi


def precession_geodesic(spec, field=None, rtol=1e-10, atol=1e-12, h_max=None):
    """Perihelion advance from the equation of motion in the weak solution.

    Starts at perihelion on the equator and locates the next rising zero of
    ``u3`` past the aphelion. Returns ``(dphi, trajectory)``.
    """
    from ..metrics.spherical import weak_spherical

    if spec.a == spec.p:
        raise ValueError("circular orbit (a = p): the perihelion is not defined")
    field = field if field is not None else weak_spherical(spec.r_M)
    x0 = np.array([math.pi / 2, 0.0, spec.p, 0.0])
    u0 = plane_orbit_velocity(spec, spec.p)
    period = 2 * math.pi * math.sqrt((0.5 * (spec.a + spec.p)) ** 3 / spec.r_M)
    half = 0.5 * period
    # the gate value is positive so that opening the gate is never a rising crossing
    event = (lambda t, x, u: u[2] if t > half else 1.0, 1, True)
    traj = integrate_geodesic(
        field, GeodesicState(x0, u0), 2 * period, rtol=rtol, atol=atol, h0=period * 1e-6, h_max=h_max, events=[event]
    )
    if not traj.events:
        raise DivergenceError(f"no return to perihelion within two periods ({traj.status} {traj.reason})".strip())
    phi = traj.events[0][2][1]
    return abs(phi) - 2 * math.pi, traj


@dataclass(frozen=True)
class ExtremeVelocities:
    beta_min: float
    beta_max: float


def extreme_velocities(spec):
    """Transverse speeds at aphelion (``beta_min``) and perihelion (``beta_max``)."""
    a, p, r = spec.a, spec.p, spec.r_M
    num_max = 2 * r * (p - 2 * r)
    num_min = 2 * r * (a - 2 * r)
    if num_max < 0 or num_min < 0:
        raise DomainError("negative radicand in extreme velocities", locus="x3 <= 2 r_M")
    beta_max = (a / p) * math.sqrt(num_max / ((a + p) * (a - 2 * r)))
    beta_min = (p / a) * math.sqrt(num_min / ((a + p) * (p - 2 * r)))
    return ExtremeVelocities(beta_min=beta_min, beta_max=beta_max)


def _check_radius(y3, r_M):
    if not (r_M >= 0 and math.isfinite(y3) and y3 > 0):
        raise DomainError(f"invalid radius {y3} or mass length {r_M}", locus="y3 <= 0")


def schwarzschild_energy(y30, beta30, r_M):
    """Energy constant ``c4`` of a radial fall starting at ``y30`` with speed ``beta30``."""
    if math.isinf(y30):
        return 1.0 / math.sqrt(1 - beta30 * beta30)
    _check_radius(y30, r_M)
    g0 = 1 - 2 * r_M / y30
    if not (g0 > 0 and g0 * g0 > beta30 * beta30):
        raise DomainError("start point inside 2 r_M or faster than light", locus="forbidden region")
    return g0 * math.sqrt(g0 / (g0 * g0 - beta30 * beta30))


def radial_velocity_schwarzschild(y3, c4, r_M):
    """Coordinate radial velocity ``dr/dt`` of an infalling particle (negative)."""
    _check_radius(y3, r_M)
    if y3 < 2 * r_M:
        raise DomainError(f"radius {y3} inside 2 r_M", locus="y3 < 2 r_M")
    if not c4 > 0:
        raise ValueError("c4 must be positive")
    g = 1 - 2 * r_M / y3
    rad = c4 * c4 - g
    if rad < 0:
        raise DomainError(f"radius {y3} is not reached with c4 = {c4}", locus="forbidden region")
    return -g * math.sqrt(rad) / c4


@dataclass(frozen=True)
class RadialExtremum:
    y3m: float
    beta3m: float


def radial_extremum(c4, r_M):
    """Radius and value of the largest infall speed in Schwarzschild coordinates.

    ``beta^2 = g^2 (c4^2 - g) / c4^2`` with ``g = 1 - 2 r_M / y3`` peaks at
    ``g = 2 c4^2 / 3``, i.e. ``y3m = 2 r_M / (1 - 2 c4^2 / 3)`` and
    ``|beta3m| = 2 c4^2 / (3 sqrt 3)``.
    """
    if not c4 > 0:
        raise ValueError("c4 must be positive")
    denom = 1 - 2 * c4 * c4 / 3
    if denom <= 0:
        raise DomainError("c4^2 >= 3/2: the speed grows all the way in, no interior extremum", locus="c4^2 >= 3/2")
    return RadialExtremum(y3m=2 * r_M / denom, beta3m=-2 * c4 * c4 / (3 * math.sqrt(3)))


def weak_energy(y30, beta30, r_M):
    """Energy constant of a radial fall in the weak solution, ``c4 = (g0 - s0 b0) / sqrt(g0 - 2 s0 b0 - b0^2)``."""
    if math.isinf(y30):
        s0, g0 = 0.0, 1.0
    else:
        _check_radius(y30, r_M)
        s0 = math.sqrt(2 * r_M / y30)
        g0 = 1 - s0 * s0
    den = g0 - 2 * s0 * beta30 - beta30 * beta30
    if not den > 0:
        raise DomainError("initial velocity is not timelike", locus="forbidden region")
    return (g0 - s0 * beta30) / math.sqrt(den)


def radial_velocity_weak(y3, y30, beta30, r_M):
    """Coordinate radial velocity of an infall in the weak solution (negative).

    With ``s = sqrt(2 r_M / y3)`` and ``Q = sqrt(c4^2 - 1 + s^2)`` the speed is
    ``Q (c4 + s Q) / (c4^2 + s^2)``, free of the cancellation at ``y3 = 2 r_M``.
    """
    _check_radius(y3, r_M)
    if y3 > y30:
        raise DomainError(f"radius {y3} beyond the start {y30}", locus="y3 > y30")
    c4 = weak_energy(y30, beta30, r_M)
    s = math.sqrt(2 * r_M / y3)
    rad = c4 * c4 - 1 + s * s
    if rad < -RADICAND_RTOL:
        raise DomainError("radius not reached", locus="forbidden region")
    Q = math.sqrt(max(rad, 0.0))
    return -Q * (c4 + s * Q) / (c4 * c4 + s * s)


@dataclass(frozen=True)
class PlanetRecord:
    name: str
    perihelion_km: float
    aphelion_km: float
    period_days: float

    def __post_init__(self):
        if not (self.perihelion_km > 0 and self.aphelion_km > 0 and self.period_days > 0):
            raise ValueError(f"{self.name}: distances and period must be positive")
        if self.perihelion_km > self.aphelion_km:
            raise ValueError(f"{self.name}: perihelion exceeds aphelion")


PLANET_HEADER = ["name", "perihelion_km", "aphelion_km", "period_days"]


def _parse_planets(text, source):
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    reader = csv.reader(io.StringIO("\n".join(lines)))
    header = next(reader, None)
    if header is None or [h.strip() for h in header] != PLANET_HEADER:
        raise ValueError(f"{source}: header must be {','.join(PLANET_HEADER)}")
    records = []
    for n, row in enumerate(reader, 2):
        if len(row) != 4:
            raise ValueError(f"{source}: row {n} has {len(row)} fields, expected 4")
        try:
            records.append(PlanetRecord(row[0].strip(), float(row[1]), float(row[2]), float(row[3])))
        except ValueError as exc:
            raise ValueError(f"{source}: row {n}: {exc}") from None
    return records


def load_planets(path=None):
    """Planet records from a CSV file; ``None`` loads the bundled table."""
    if path is None:
        return bundled_planets()
    with open(path, encoding="utf-8") as fh:
        return _parse_planets(fh.read(), str(path))


def bundled_planets():
    text = resources.files("matfield.dynamics").joinpath("data", "planets.csv").read_text(encoding="utf-8")
    return _parse_planets(text, "planets.csv")


@dataclass(frozen=True)
class PlanetRow:
    name: str
    dphi_per_rev: float
    dphi_per_century: float
    v_min: float
    v_max: float
    error: str = ""


def _planet_row(rec, r_M, c_kms):
    try:
        spec = OrbitSpec(p=rec.perihelion_km, a=rec.aphelion_km, r_M=r_M)
        dphi = precession(spec) * ARCSEC_PER_RAD
        v = extreme_velocities(spec)
        return PlanetRow(rec.name, dphi, dphi * DAYS_PER_CENTURY / rec.period_days, v.beta_min * c_kms, v.beta_max * c_kms)
    except (ValueError, ArithmeticError) as exc:
        nan = float("nan")
        return PlanetRow(rec.name, nan, nan, nan, nan, error=str(exc))


def planet_table(records, consts):
    """Precession (arcsec per revolution and per century) and extreme speeds (km/s).

    A row that cannot be computed carries NaNs and the error message.
    """
    r_M = mass_to_length(consts.M_sun, consts) / 1000.0
    c_kms = consts.c / 1000.0
    return [_planet_row(rec, r_M, c_kms) for rec in records]
