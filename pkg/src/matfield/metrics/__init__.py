"""Catalog of metric models, the flat-frame construction and unit conversions."""

from .closed_forms import curvature_erratum_report, spherical_curvature_matrices, w_coefficients
from .conformal import (
    SIGNATURE,
    ScaleFunction,
    constant_scale,
    fl_christoffel_closed_form,
    friedmann_lobachevsky,
    interval,
    uniform_scale,
)
from .flat import FlatFrame, FlatFrameSpec, flat_frame_metric, random_antisymmetric, random_flat_spec
from .spherical import (
    SphericalSolutionParams,
    general_spherical,
    general_weak,
    minkowski,
    rectilinear_g44_closed_form,
    rectilinear_spherical,
    schwarzschild,
    weak_spherical,
)
from .units import (
    PhysicalConstants,
    atomic_radius,
    bundled_constants,
    charge_radius,
    force_ratio,
    load_constants,
    mass_to_length,
)
