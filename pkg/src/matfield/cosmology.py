"""
Conformally flat cosmology ``g = f(s)^2 G`` with ``s^2 = x^T G x``.

Two scale functions solve the field equations. The maximally uniform one,
``f = 1 / (1 - rho s^2 / 12)``, has constant density. The Big Bang one,

    f(s) = d (1 + q)^2 / (4 s sqrt(6 rho_m) q),     q = (s / s_m)^(d/3)

has density ``rho(s) = rho_m 64 q^3 / (1 + q)^6``, which peaks at ``s = s_m``
and also follows from continuity as ``cont_const / (s f)^3``.
"""

import csv
import io
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.optimize

from .geometry import DomainError
from .metrics.conformal import SIGNATURE, ScaleFunction, friedmann_lobachevsky, interval, uniform_scale

__all__ = [
    "CosmoModel",
    "SpectrumSample",
    "SpectrumFit",
    "scale_function",
    "cosmo_metric",
    "fl_velocity",
    "fl_eigenvalues",
    "field_scalar",
    "field_matrix_P",
    "continuity_residual",
    "continuity_density",
    "bigbang_density",
    "bigbang_density_derivative",
    "bigbang_f",
    "bigbang_metric_factor",
    "rho_m_from_cont_const",
    "log_grid",
    "read_spectrum_csv",
    "spectrum_compare",
    "blackbody_samples",
]

KINDS = ("maximally_uniform", "bigbang")


@dataclass(frozen=True)
class CosmoModel:
    """Either ``kind="maximally_uniform"`` with ``rho``, or ``kind="bigbang"``
    with peak position ``s_m``, peak density ``rho_m`` and exponent ``d``."""

    kind: str
    rho: Optional[float] = None
    s_m: Optional[float] = None
    rho_m: Optional[float] = None
    d: Optional[float] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")
        if self.kind == "maximally_uniform":
            if self.rho is None or not math.isfinite(self.rho):
                raise ValueError("maximally_uniform needs a finite rho")
        else:
            for name in ("s_m", "rho_m", "d"):
                v = getattr(self, name)
                if v is None or not (v > 0 and math.isfinite(v)):
                    raise ValueError(f"bigbang needs {name} > 0")

    @classmethod
    def uniform(cls, rho):
        return cls(kind="maximally_uniform", rho=rho)

    @classmethod
    def bigbang(cls, s_m, rho_m, d):
        return cls(kind="bigbang", s_m=s_m, rho_m=rho_m, d=d)

    @property
    def cont_const(self):
        """Continuity constant: ``rho (s f)^3``, equal to ``d^3 / sqrt(216 rho_m)``."""
        if self.kind != "bigbang":
            raise ValueError("the continuity constant is defined for the bigbang model")
        return self.d**3 / math.sqrt(216 * self.rho_m)

    def density(self, s):
        if self.kind == "bigbang":
            return bigbang_density(self, s)
        if 1 - self.rho * s * s / 12 <= 0:
            raise DomainError(f"s = {s} is outside 1 - rho s^2 / 12 > 0", locus="1 - rho s^2/12 <= 0")
        return self.rho


def rho_m_from_cont_const(cont_const, d):
    return d**6 / (216 * cont_const**2)


def _require_bigbang(model):
    if not isinstance(model, CosmoModel) or model.kind != "bigbang":
        raise ValueError("a bigbang CosmoModel is required")


def _check_s(s):
    if not (s > 0 and math.isfinite(s)):
        raise DomainError(f"s must be positive, got {s}", locus="s <= 0")


def bigbang_density(model, s):
    """``rho_m 64 (s/s_m)^d / (1 + (s/s_m)^(d/3))^6``."""
    _require_bigbang(model)
    _check_s(s)
    q = (s / model.s_m) ** (model.d / 3)
    return model.rho_m * 64 * q**3 / (1 + q) ** 6


def bigbang_density_derivative(model, s):
    """``rho'(s) = rho d (1 - q) / (s (1 + q))``: positive below ``s_m``, negative above."""
    q = (s / model.s_m) ** (model.d / 3)
    return bigbang_density(model, s) * model.d * (1 - q) / (s * (1 + q))


def _bigbang_log_slope(model, s):
    q = (s / model.s_m) ** (model.d / 3)
    k = model.d / 3
    B = 2 * k * q / (1 + q) - 1 - k
    dB = 2 * k * k * q / (s * (1 + q) ** 2)
    return B / s, dB / s - B / (s * s)


def bigbang_f(model, s):
    """Big Bang scale function ``d (1 + q)^2 / (4 s sqrt(6 rho_m) q)``."""
    _require_bigbang(model)
    _check_s(s)
    q = (s / model.s_m) ** (model.d / 3)
    return model.d * (1 + q) ** 2 / (4 * s * math.sqrt(6 * model.rho_m) * q)


def bigbang_metric_factor(model, s):
    """Conformal factor of ``g`` written directly: ``d^2 (1+q)^4 / (96 s^2 rho_m q^2)``."""
    _require_bigbang(model)
    _check_s(s)
    q = (s / model.s_m) ** (model.d / 3)
    return model.d**2 * (1 + q) ** 4 / (96 * s * s * model.rho_m * q * q)


def _bigbang_scale(model):
    def df(s):
        L, _ = _bigbang_log_slope(model, s)
        return bigbang_f(model, s) * L

    def d2f(s):
        L, dL = _bigbang_log_slope(model, s)
        return bigbang_f(model, s) * (dL + L * L)

    name = f"bigbang(s_m={model.s_m},rho_m={model.rho_m},d={model.d})"
    return ScaleFunction(f=lambda s: bigbang_f(model, s), df=df, d2f=d2f, name=name)


def scale_function(model):
    """:class:`ScaleFunction` with analytic first and second derivatives."""
    if model.kind == "bigbang":
        return _bigbang_scale(model)
    return uniform_scale(model.rho)


def cosmo_metric(model):
    """The :class:`MetricField` ``f(s)^2 G`` for ``model``."""
    return friedmann_lobachevsky(scale_function(model), name=f"fl-{model.kind}")


def _as_scale(f_fn):
    return f_fn if isinstance(f_fn, ScaleFunction) else ScaleFunction(f=f_fn)


def fl_velocity(x, f_fn):
    """Comoving 4-velocity ``x / (s f(s))``."""
    x = np.asarray(x, dtype=float)
    s = interval(x)
    return x / (s * _as_scale(f_fn)(s))


def fl_eigenvalues(f_fn, s):
    """Distinct eigenvalues ``(mu1, mu4)`` of ``inv(g) R``; ``mu1`` is triple.

    Missing derivatives of ``f_fn`` are taken by finite differences.
    """
    _check_s(s)
    sc = _as_scale(f_fn)
    f, f1, f2 = sc(s), sc.d1(s), sc.d2(s)
    if not f > 0:
        raise DomainError(f"scale function is not positive at s = {s}", locus="f <= 0")
    den = s * f**4
    mu1 = (s * f1 * f1 + 5 * f * f1 + s * f * f2) / den
    mu4 = 3 * (-s * f1 * f1 + f * (f1 + s * f2)) / den
    return mu1, mu4


def field_scalar(f_fn, s):
    """``h = (f + s f') / (s f^2)``."""
    sc = _as_scale(f_fn)
    f = sc(s)
    return (f + s * sc.d1(s)) / (s * f * f)


def field_matrix_P(f_fn, x):
    """Covariant field matrix ``h (g - g u u^T g)``, a projector orthogonal to ``u``."""
    x = np.asarray(x, dtype=float)
    s = interval(x)
    sc = _as_scale(f_fn)
    g = sc(s) ** 2 * SIGNATURE
    gu = g @ fl_velocity(x, sc)
    return field_scalar(sc, s) * (g - np.outer(gu, gu))


def continuity_residual(f_fn, rho_fn, s, drho_fn=None):
    """``(3 rho f' + f (3 rho / s + rho')) / f^2``, zero for a conserved flow.

    ``rho'`` comes from ``drho_fn`` when given, else a five-point difference.
    """
    _check_s(s)
    sc = _as_scale(f_fn)
    f, f1 = sc(s), sc.d1(s)
    rho = rho_fn(s)
    if drho_fn is not None:
        drho = drho_fn(s)
    else:
        h = 1e-4 * s
        drho = (-rho_fn(s + 2 * h) + 8 * rho_fn(s + h) - 8 * rho_fn(s - h) + rho_fn(s - 2 * h)) / (12 * h)
    return (3 * rho * f1 + f * (3 * rho / s + drho)) / (f * f)


def continuity_density(f_fn, cont_const):
    """Density ``cont_const / (s f)^3`` that conserves the comoving flow for ``f_fn``."""
    sc = _as_scale(f_fn)
    return lambda s: cont_const / (s * sc(s)) ** 3


def log_grid(s_m, n=100, span=50.0):
    """``n`` points log-spaced over ``[s_m / span, span s_m]``."""
    return np.geomspace(s_m / span, s_m * span, n)


@dataclass(frozen=True)
class SpectrumSample:
    s: float
    intensity: float

    def __post_init__(self):
        if not (self.s > 0 and math.isfinite(self.s)):
            raise ValueError(f"abscissa must be positive, got {self.s}")
        if not (self.intensity >= 0 and math.isfinite(self.intensity)):
            raise ValueError(f"intensity must be non-negative, got {self.intensity}")


def read_spectrum_csv(path_or_text, is_text=False):
    """Samples from a CSV with header ``s,intensity`` (``#`` lines ignored)."""
    if is_text:
        text, source = path_or_text, "<text>"
    else:
        with open(path_or_text, encoding="utf-8") as fh:
            text, source = fh.read(), str(path_or_text)
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    reader = csv.reader(io.StringIO("\n".join(lines)))
    header = next(reader, None)
    if header is None or [h.strip() for h in header] != ["s", "intensity"]:
        raise ValueError(f"{source}: header must be s,intensity")
    samples = []
    for n, row in enumerate(reader, 2):
        if len(row) != 2:
            raise ValueError(f"{source}: row {n} has {len(row)} fields, expected 2")
        try:
            samples.append(SpectrumSample(float(row[0]), float(row[1])))
        except ValueError as exc:
            raise ValueError(f"{source}: row {n}: {exc}") from None
    return samples


@dataclass(frozen=True)
class SpectrumFit:
    d: float
    s_m: float
    rho_scale: float
    rms_residual: float
    peak_offset: float

    def to_dict(self):
        return {
            "d": self.d,
            "s_m": self.s_m,
            "rho_scale": self.rho_scale,
            "rms_residual": self.rms_residual,
            "peak_offset": self.peak_offset,
        }


def _shape(s, s_m, d):
    q = (s / s_m) ** (d / 3)
    return 64 * q**3 / (1 + q) ** 6


def spectrum_compare(samples, d=5.4, normalization=1.0):
    """Fit ``rho_scale * rho(s / s_m) / rho_m`` to ``intensity / normalization``.

    ``s_m`` and ``rho_scale`` are found by least squares. Reported are the
    RMS residual in normalized units and the relative offset between the
    brightest sample and the fitted peak, ``(s_peak - s_m) / s_m``.
    """
    if len(samples) < 10:
        raise ValueError(f"need at least 10 samples, got {len(samples)}")
    if not normalization > 0:
        raise ValueError("normalization must be positive")
    s = np.array([p.s for p in samples])
    y = np.array([p.intensity for p in samples]) / normalization
    if np.ptp(y) == 0:
        raise ValueError("degenerate fit: all intensities are equal")
    peak = int(np.argmax(y))

    def resid(theta):
        return theta[1] * _shape(s, math.exp(theta[0]), d) - y

    def jac(theta):
        s_m = math.exp(theta[0])
        q = (s / s_m) ** (d / 3)
        shape = _shape(s, s_m, d)
        # d shape / d log s_m = -shape d (1 - q) / (1 + q)
        return np.column_stack([-theta[1] * shape * d * (1 - q) / (1 + q), shape])

    start = np.array([math.log(s[peak]), y[peak]])
    sol = scipy.optimize.least_squares(
        resid, start, jac=jac, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=10000
    )
    s_m, scale = math.exp(sol.x[0]), float(sol.x[1])
    rms = float(np.sqrt(np.mean(resid(sol.x) ** 2)))
    return SpectrumFit(d=d, s_m=s_m, rho_scale=scale, rms_residual=rms, peak_offset=float((s[peak] - s_m) / s_m))


# second radiation constant h c / k in cm K
_HC_OVER_K = 1.438776877


def blackbody_samples(temperature=2.72548, nu_min=2.0, nu_max=21.0, n=43):
    """Planck intensity ``nu^3 / (exp(hc nu / kT) - 1)`` sampled in wavenumber (1/cm).

    The default range and count follow the far-infrared sky spectrum
    measurements of the cosmic background; intensities are scaled to a
    unit maximum over the samples.
    """
    nu = np.linspace(nu_min, nu_max, n)
    inten = nu**3 / np.expm1(_HC_OVER_K * nu / temperature)
    inten /= inten.max()
    return [SpectrumSample(float(a), float(b)) for a, b in zip(nu, inten)]
