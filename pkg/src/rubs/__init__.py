"""Fast space-variant elliptical filtering with box-spline kernels.

The package implements Gaussian-like smoothing whose kernel size,
elongation and orientation may change from pixel to pixel while the
cost per pixel stays constant: the image is pre-integrated once with
four running-sum sweeps and every output sample is then a short,
scale-dependent linear combination of interpolated values of that
integral plane.

Main entry points
-----------------
filter_space_variant / filter_space_invariant
    The O(1)-per-pixel filtering engine.
optimize_scale_vector
    Map a target covariance to the scale-vector whose kernel is closest
    to a Gaussian (kurtosis moment matching).
build_lut / lookup
    Precomputed solver results over an (elongation, orientation) grid.
adaptive_smooth
    Structure-tensor driven smoothing that picks per-pixel ellipses.
synthesize_kernel and friends in ``rubs.oracle``
    Slow reference constructions used to validate everything else.
"""

from .geometry import (
    EllipseParams,
    covariance_from_params,
    covariance_of,
    ellipse_params_of,
    elongation_bound,
    support_polygon,
)
from .solver import (
    Infeasible,
    OutOfGrid,
    ScaleLut,
    build_lut,
    kurtosis_matrix,
    load_lut,
    lookup,
    optimize_line_position,
    optimize_scale_vector,
    save_lut,
    solve_line,
)
from .engine import (
    ScaleField,
    average_1d,
    filter_space_invariant,
    filter_space_variant,
    preintegrate,
)
from .zp import interpolate, zp_eval
from .oracle import psnr, stripe_image, synthesize_kernel
from .tensor import adaptive_smooth, structure_tensor

__version__ = "0.1.0"

__all__ = [
    "EllipseParams",
    "covariance_of",
    "covariance_from_params",
    "ellipse_params_of",
    "elongation_bound",
    "support_polygon",
    "Infeasible",
    "OutOfGrid",
    "ScaleLut",
    "build_lut",
    "load_lut",
    "save_lut",
    "lookup",
    "kurtosis_matrix",
    "optimize_line_position",
    "optimize_scale_vector",
    "solve_line",
    "ScaleField",
    "average_1d",
    "filter_space_invariant",
    "filter_space_variant",
    "preintegrate",
    "interpolate",
    "zp_eval",
    "synthesize_kernel",
    "psnr",
    "stripe_image",
    "adaptive_smooth",
    "structure_tensor",
    "__version__",
]
