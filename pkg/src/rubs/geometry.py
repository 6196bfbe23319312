"""Second-order geometry of four-direction box-spline kernels.

A kernel is described by a scale-vector a = (a1, a2, a3, a4), one box
width per direction theta_k = (k - 1) * pi / 4.  All routines here work
on the level of second moments: the map from scale-vector to covariance
matrix, its inverse description in terms of (size, elongation,
orientation), and the reachable-elongation bound that decides whether a
requested ellipse can be produced at all.

Conventions used throughout the package:

* orientation angles live in [0, pi); an isotropic covariance reports
  orientation 0.0,
* elongation is the ratio of the larger to the smaller eigenvalue of
  the covariance, so it is always >= 1,
* size is the trace of the covariance.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

__all__ = [
    "EllipseParams",
    "as_scale_vector",
    "direction_vectors",
    "covariance_of",
    "covariance_general",
    "validate_covariance",
    "ellipse_params_of",
    "covariance_from_params",
    "elongation_bound",
    "support_polygon",
    "MIN_ELONGATION_BOUND",
]

# Relative determinant tolerance below which a covariance is rejected as
# numerically singular.
PD_TOL = 1e-12

# Discriminant threshold (relative to the trace) below which the two
# eigenvalues are treated as equal and the orientation snaps to 0.
DEGENERATE_RATIO = 1e-12

# Smallest value the elongation bound attains, reached halfway between
# two principal directions: 3 + 2*sqrt(2).
MIN_ELONGATION_BOUND = 3.0 + 2.0 * math.sqrt(2.0)

_PRINCIPAL = (0.0, 0.25 * math.pi, 0.5 * math.pi, 0.75 * math.pi)


class EllipseParams(NamedTuple):
    """Covariance ellipse described by trace, axis ratio and angle."""

    size: float
    elongation: float
    orientation: float


def as_scale_vector(a) -> np.ndarray:
    """Validate and return a as a float64 array of shape (4,).

    Raises ValueError unless all four entries are finite and > 0.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.shape != (4,):
        raise ValueError(f"scale-vector must have shape (4,), got {a.shape}")
    if not np.all(np.isfinite(a)) or np.any(a <= 0.0):
        raise ValueError("scale-vector entries must be finite and positive")
    return a


def direction_vectors(n: int) -> np.ndarray:
    """Unit direction vectors (cos, sin) at angles (k-1)*pi/n, k = 1..n."""
    if n < 2:
        raise ValueError("need at least two directions")
    ang = np.arange(n) * (math.pi / n)
    return np.stack([np.cos(ang), np.sin(ang)], axis=-1)


def covariance_of(a) -> np.ndarray:
    """Covariance matrix of the four-direction kernel with scales a.

    Each directional box of width a_k contributes a_k^2 / 12 times the
    outer product of its direction; for the fixed directions at
    multiples of 45 degrees the sum collapses to

        C = 1/24 * [[2*a1^2 + a2^2 + a4^2,  a2^2 - a4^2        ],
                    [a2^2 - a4^2,           2*a3^2 + a2^2 + a4^2]]
    """
    a = as_scale_vector(a)
    p = a * a
    c11 = (2.0 * p[0] + p[1] + p[3]) / 24.0
    c22 = (2.0 * p[2] + p[1] + p[3]) / 24.0
    c12 = (p[1] - p[3]) / 24.0
    return np.array([[c11, c12], [c12, c22]])


def covariance_general(scales) -> np.ndarray:
    """Covariance of an n-direction kernel: sum of a_k^2/12 u_k u_k^T."""
    scales = np.asarray(scales, dtype=np.float64)
    u = direction_vectors(scales.shape[0])
    return np.einsum("k,ki,kj->ij", scales * scales / 12.0, u, u)


def validate_covariance(c) -> np.ndarray:
    """Check symmetry and positive definiteness, return as 2x2 float64.

    Definiteness is judged against a relative floor: the determinant
    must exceed PD_TOL * (c11 + c22)^2.
    """
    c = np.asarray(c, dtype=np.float64)
    if c.shape != (2, 2):
        raise ValueError(f"covariance must be 2x2, got shape {c.shape}")
    if not np.all(np.isfinite(c)):
        raise ValueError("covariance entries must be finite")
    if abs(c[0, 1] - c[1, 0]) > 1e-12 * (abs(c[0, 1]) + abs(c[1, 0]) + 1.0):
        raise ValueError("covariance must be symmetric")
    tr = c[0, 0] + c[1, 1]
    det = c[0, 0] * c[1, 1] - c[0, 1] * c[1, 0]
    if tr <= 0.0 or c[0, 0] <= 0.0 or c[1, 1] <= 0.0 or det <= PD_TOL * tr * tr:
        raise ValueError("covariance must be positive definite")
    return c


def ellipse_params_of(c) -> EllipseParams:
    """Size, elongation and orientation of a covariance matrix.

    Orientation is the angle of the major eigenvector, reduced to
    [0, pi).  When the two eigenvalues agree to within
    DEGENERATE_RATIO relative to the trace the matrix is reported as
    isotropic: elongation exactly 1.0 and orientation exactly 0.0.
    """
    c = validate_covariance(c)
    tr = c[0, 0] + c[1, 1]
    diff = c[0, 0] - c[1, 1]
    disc = math.hypot(diff, 2.0 * c[0, 1])
    if disc <= DEGENERATE_RATIO * tr:
        return EllipseParams(tr, 1.0, 0.0)
    lmax = 0.5 * (tr + disc)
    lmin = 0.5 * (tr - disc)
    theta = 0.5 * math.atan2(2.0 * c[0, 1], diff)
    if theta < 0.0:
        theta += math.pi
    if theta >= math.pi:
        theta -= math.pi
    return EllipseParams(tr, lmax / lmin, theta)


def covariance_from_params(size: float, elongation: float, orientation: float) -> np.ndarray:
    """Covariance with the given trace, axis ratio and major-axis angle.

    The eigenvalues are size * r / (1 + r) and size / (1 + r) with
    r = elongation, so the trace and the ratio are met exactly.
    """
    if not (size > 0.0 and math.isfinite(size)):
        raise ValueError("size must be positive and finite")
    if not (elongation >= 1.0 and math.isfinite(elongation)):
        raise ValueError("elongation must be >= 1")
    if not (0.0 <= orientation < math.pi):
        raise ValueError("orientation must lie in [0, pi)")
    lmax = size * elongation / (1.0 + elongation)
    lmin = size / (1.0 + elongation)
    cth = math.cos(orientation)
    sth = math.sin(orientation)
    c11 = lmax * cth * cth + lmin * sth * sth
    c22 = lmax * sth * sth + lmin * cth * cth
    c12 = (lmax - lmin) * cth * sth
    return np.array([[c11, c12], [c12, c22]])


def elongation_bound(phi: float) -> float:
    """Largest covariance elongation reachable at orientation phi.

    Along the four box directions (multiples of pi/4) the kernel can be
    stretched without limit, so the bound is +inf there.  In between it
    is finite and dips to 3 + 2*sqrt(2) halfway between two directions.
    The closed form uses nu = -cot(2*phi) * sign(pi/2 - phi):

        U(phi) = (1 + |nu| + sqrt(1 + nu^2)) / (1 + |nu| - sqrt(1 + nu^2))

    with the denominator evaluated as 1 - 1/(|nu| + sqrt(1 + nu^2)) to
    stay accurate for large |nu|.
    """
    if not (0.0 <= phi < math.pi):
        raise ValueError("orientation must lie in [0, pi)")
    if phi in _PRINCIPAL:
        return math.inf
    s2 = math.sin(2.0 * phi)
    if s2 == 0.0:
        return math.inf
    nu = abs(math.cos(2.0 * phi) / s2)
    if abs(nu - 1.0) < 4e-16:
        # Midway between two principal directions: the exact minimum.
        # The quotient above can land a rounding step away from 1, so
        # snap a one-ulp window onto the closed-form value.
        return MIN_ELONGATION_BOUND
    root = math.hypot(1.0, nu)
    return (1.0 + nu + root) / (1.0 - 1.0 / (nu + root))


def support_polygon(a) -> np.ndarray:
    """Vertices of the kernel's octagonal support, CCW.

    The support is the Minkowski sum of the four directional segments,
    i.e. the convex hull of sum(+-a_k u_k / 2) over all sign choices.
    Vertices are returned in counter-clockwise order starting from the
    one with the largest x1 (ties broken by larger x2).  Collinear
    corner candidates merge, so thin scale-vectors may return fewer
    than eight vertices.
    """
    a = as_scale_vector(a)
    u = direction_vectors(4) * (0.5 * a[:, None])
    signs = ((np.arange(16)[:, None] >> np.arange(4)[None, :]) & 1) * 2 - 1
    pts = signs @ u

    # Monotone-chain hull over the 16 candidate corners.
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    pts = pts[order]

    def half(seq):
        hull = []
        for p in seq:
            while len(hull) >= 2:
                ox, oy = hull[-2]
                ax_, ay_ = hull[-1]
                if (ax_ - ox) * (p[1] - oy) - (ay_ - oy) * (p[0] - ox) <= 1e-12:
                    hull.pop()
                else:
                    break
            hull.append((p[0], p[1]))
        return hull

    lower = half(pts)
    upper = half(pts[::-1])
    verts = np.array(lower[:-1] + upper[:-1])

    # Monotone chain emits CCW already; rotate so the max-x1 vertex leads.
    start = np.lexsort((verts[:, 1], verts[:, 0]))[-1]
    return np.roll(verts, -start, axis=0)
