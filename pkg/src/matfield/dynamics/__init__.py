"""Equation of motion, plane orbits and radial infall."""

from .geodesic import *  # noqa: F401,F403
from .geodesic import __all__ as _geodesic_all
from .orbits import *  # noqa: F401,F403
from .orbits import __all__ as _orbits_all

__all__ = list(_geodesic_all) + list(_orbits_all)
