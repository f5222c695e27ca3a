"""
Curvature, geodesics and cosmology for metrics written as matrices.

The package is organised in layers: :mod:`matfield.matcore` for small dense
linear algebra, :mod:`matfield.geometry` for the curvature engine,
:mod:`matfield.metrics` for the catalog of metric models,
:mod:`matfield.dynamics` for geodesics and orbits and
:mod:`matfield.cosmology` for the conformally flat models.
"""

__version__ = "0.1.0"
