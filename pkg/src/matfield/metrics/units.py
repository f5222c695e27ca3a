"""
Geometrized units: masses and charges expressed as lengths.
"""

from dataclasses import dataclass, fields
from importlib import resources
from math import pi

__all__ = [
    "PhysicalConstants",
    "load_constants",
    "bundled_constants",
    "mass_to_length",
    "charge_radius",
    "atomic_radius",
    "force_ratio",
]

DEFAULT_CONSTANTS = "constants_codata2018.txt"


@dataclass(frozen=True)
class PhysicalConstants:
    """SI constants; every value must come from a constants file."""

    G_g: float
    c: float
    eps0: float
    q: float
    m_p: float
    m_e: float
    hbar: float
    M_sun: float

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not v > 0:
                raise ValueError(f"constant {f.name} must be positive, got {v}")


def _parse(text, source):
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{source}:{lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in values:
            raise ValueError(f"{source}:{lineno}: duplicate key {key}")
        try:
            values[key] = float(value)
        except ValueError:
            raise ValueError(f"{source}:{lineno}: value for {key} is not a number") from None
    expected = {f.name for f in fields(PhysicalConstants)}
    if set(values) != expected:
        missing = sorted(expected - set(values))
        extra = sorted(set(values) - expected)
        raise ValueError(f"{source}: constants file must define exactly {sorted(expected)}; missing {missing}, unknown {extra}")
    return PhysicalConstants(**values)


def load_constants(path=None):
    """Read a ``key = value`` constants file; ``None`` loads the bundled default."""
    if path is None:
        return bundled_constants()
    with open(path, encoding="utf-8") as fh:
        return _parse(fh.read(), str(path))


def bundled_constants(name=DEFAULT_CONSTANTS):
    """One of the constants files shipped with the package.

    ``constants_codata2018.txt`` is the default; ``constants_codata1986.txt``
    carries the older gravitational constant.
    """
    text = resources.files("matfield.metrics").joinpath("data", name).read_text(encoding="utf-8")
    return _parse(text, name)


def mass_to_length(M, consts):
    """``G M / c^2`` in metres."""
    if not M > 0:
        raise ValueError(f"mass must be positive, got {M}")
    return consts.G_g * M / consts.c**2


def charge_radius(q, m, consts):
    """``q^2 / (4 pi eps0 m c^2)`` in metres."""
    if not (q > 0 and m > 0):
        raise ValueError("charge and mass must be positive")
    return q * q / (4 * pi * consts.eps0 * m * consts.c**2)


def atomic_radius(consts):
    """Hydrogen radius ``eps0 h^2 / (pi m_e q^2)`` with ``h = 2 pi hbar``."""
    h = 2 * pi * consts.hbar
    return consts.eps0 * h * h / (pi * consts.m_e * consts.q**2)


def force_ratio(consts):
    """Electric over gravitational attraction between two protons."""
    return consts.q**2 / (4 * pi * consts.eps0 * consts.G_g * consts.m_p**2)
