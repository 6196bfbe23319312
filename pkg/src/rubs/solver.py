"""Scale-vector selection by kurtosis moment matching.

For a target covariance C the squared scales p = a * a must satisfy
three linear equations (from the covariance closed form), leaving a
one-parameter family

    p(t) = p_base + t * (1, -1, 1, -1)

restricted to p(t) > 0.  Among the feasible points the solver picks
the one minimising a fourth-order anisotropy measure: the squared
Frobenius norm of the kernel's kurtosis matrix, which is a quartic
polynomial in t.  Its derivative is a cubic, solved in closed form and
polished with one Newton step, so the whole optimisation is O(1).

A precomputed lookup table over (elongation, orientation) makes the
per-pixel path cheap: table entries are solved for unit size, folded
into the first quadrant-of-a-turn, and mapped back on lookup by scale
symmetry (multiply by sqrt(size)) and quarter-turn symmetry (cyclic
shift of the scales).
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .geometry import (
    covariance_from_params,
    covariance_of,
    direction_vectors,
    ellipse_params_of,
    elongation_bound,
    validate_covariance,
)
from ._io import atomic_write_bytes

__all__ = [
    "Infeasible",
    "OutOfGrid",
    "SolutionLine",
    "solve_line",
    "kurtosis_norm_sq",
    "kurtosis_matrix",
    "rotate_quarter",
    "optimize_scale_vector",
    "ScaleLut",
    "build_lut",
    "lookup",
    "lookup_many",
    "save_lut",
    "load_lut",
]

_LINE_DIR = np.array([1.0, -1.0, 1.0, -1.0])

LUT_MAGIC = b"RUBS"
LUT_VERSION = 1


class Infeasible(ValueError):
    """Raised when no positive scale-vector matches the covariance.

    Feasibility only depends on the ellipse shape: the requested
    elongation must stay below the orientation-dependent bound.
    """

    def __init__(self, orientation: float, elongation: float, bound: float):
        self.orientation = orientation
        self.elongation = elongation
        self.bound = bound
        super().__init__(
            f"elongation {elongation:.6g} at orientation {orientation:.6g} rad "
            f"exceeds the reachable bound {bound:.6g}"
        )


class OutOfGrid(ValueError):
    """Requested parameters fall outside a lookup table's grid."""


class SolutionLine(NamedTuple):
    """Feasible segment of squared scales: base + t * (1,-1,1,-1)."""

    base: np.ndarray
    t_lo: float
    t_hi: float


def solve_line(c, eps: float = 1e-6) -> SolutionLine:
    """Solve the covariance constraints for the squared scales.

    Returns the particular solution with p4 fixed and the t interval
    on which all four squared scales stay positive, shrunk by ``eps``
    on each side so downstream square roots stay well away from zero.
    Raises Infeasible when the interval is empty.
    """
    c = validate_covariance(c)
    c1 = 24.0 * c[0, 0]
    c2 = 24.0 * c[0, 1]
    c3 = 24.0 * c[1, 1]
    base = np.array([0.5 * (c1 - c2 - 2.0), c2 + 1.0, 0.5 * (c3 - c2 - 2.0), 1.0])
    t_lo = max(-base[0], -base[2]) + eps
    t_hi = min(base[1], base[3]) - eps
    if t_lo > t_hi:
        size, rho, theta = ellipse_params_of(c)
        raise Infeasible(theta, rho, elongation_bound(theta))
    return SolutionLine(base, float(t_lo), float(t_hi))


def kurtosis_norm_sq(p) -> float:
    """Squared Frobenius norm of the kurtosis matrix, rescaled.

    In terms of squared scales p this is
    sum(p^4) + (p1^2 + p3^2) * (p2^2 + p4^2); the constant 1/120^2 is
    dropped since only comparisons along the line matter.
    """
    p = np.asarray(p, dtype=np.float64)
    sq = p * p
    return float(np.sum(sq * sq) + (sq[0] + sq[2]) * (sq[1] + sq[3]))


def _zeta_derivative_coeffs(base):
    """Coefficients (t^3, t^2, t, 1) of d/dt kurtosis along the line."""
    b1, b2, b3, b4 = base
    alpha = b1 + b3
    beta = b2 + b4
    ssq = b1 * b1 + b2 * b2 + b3 * b3 + b4 * b4
    z3 = 32.0
    z2 = 24.0 * (b1 - b2 + b3 - b4)
    z1 = 16.0 * ssq - 8.0 * alpha * beta
    z0 = (
        4.0 * (b1**3 - b2**3 + b3**3 - b4**3)
        + 2.0 * alpha * (b2 * b2 + b4 * b4)
        - 2.0 * beta * (b1 * b1 + b3 * b3)
    )
    return z3, z2, z1, z0


def _cubic_real_roots(a, b, c, d):
    """Real roots of a t^3 + b t^2 + c t + d = 0, closed form.

    Depressed-cubic substitution; three-real-root case through the
    trigonometric branch, single-root case through Cardano with
    sign-preserving cube roots.
    """
    if a == 0.0:
        raise ValueError("leading coefficient must be nonzero")
    b, c, d = b / a, c / a, d / a
    p = c - b * b / 3.0
    q = 2.0 * b**3 / 27.0 - b * c / 3.0 + d
    shift = -b / 3.0
    disc = (q / 2.0) ** 2 + (p / 3.0) ** 3
    if disc > 0.0:
        r = math.sqrt(disc)
        u = math.copysign(abs(-q / 2.0 + r) ** (1.0 / 3.0), -q / 2.0 + r)
        v = math.copysign(abs(-q / 2.0 - r) ** (1.0 / 3.0), -q / 2.0 - r)
        return [u + v + shift]
    if p == 0.0:
        return [shift]
    m = 2.0 * math.sqrt(-p / 3.0)
    arg = 3.0 * q / (p * m)
    arg = min(1.0, max(-1.0, arg))
    phi = math.acos(arg) / 3.0
    return [m * math.cos(phi - 2.0 * math.pi * k / 3.0) + shift for k in range(3)]


def optimize_line_position(c, eps: float = 1e-6) -> tuple[SolutionLine, float]:
    """Feasible line plus the position on it with minimal kurtosis norm.

    The quartic objective is minimised exactly over the feasible t
    segment: stationary points come from the closed-form cubic (one
    Newton polish each), the segment endpoints are always candidates,
    and ties are broken towards the smallest t.
    """
    line = solve_line(c, eps)
    base = line.base
    z3, z2, z1, z0 = _zeta_derivative_coeffs(base)

    cands = [line.t_lo, line.t_hi]
    for t in _cubic_real_roots(z3, z2, z1, z0):
        d1 = ((z3 * t + z2) * t + z1) * t + z0
        d2 = (3.0 * z3 * t + 2.0 * z2) * t + z1
        if d2 != 0.0:
            t = t - d1 / d2
        if line.t_lo - 1e-10 <= t <= line.t_hi + 1e-10:
            cands.append(min(max(t, line.t_lo), line.t_hi))
    cands.sort()
    vals = [kurtosis_norm_sq(base + t * _LINE_DIR) for t in cands]
    t0 = cands[int(np.argmin(vals))]  # stable: smallest t wins ties
    return line, t0


def optimize_scale_vector(c, eps: float = 1e-6) -> np.ndarray:
    """Scale-vector realising covariance c with minimal kurtosis norm."""
    line, t0 = optimize_line_position(c, eps)
    return np.sqrt(line.base + t0 * _LINE_DIR)


def kurtosis_matrix(a) -> np.ndarray:
    """Matrix-valued Gaussianity deficit of the kernel.

    Defined as L - trace(C) * C - 2 C @ C, where C is the covariance
    and L the fourth-order matrix integral of |x|^2 x x^T against the
    kernel; it vanishes exactly for Gaussians.  For a box convolution
    it reduces to the contracted fourth cumulant
    -1/120 * sum_k a_k^4 u_k u_k^T, which is what gets evaluated
    (negative definite, so these kernels are mildly sub-Gaussian).
    """
    a = np.asarray(a, dtype=np.float64)
    u = direction_vectors(4)
    return -np.einsum("k,ki,kj->ij", a**4, u, u) / 120.0


def rotate_quarter(a) -> np.ndarray:
    """Scales of the same kernel rotated by +45 degrees.

    Each directional box moves to the next direction, so the vector
    shifts cyclically: (a1, a2, a3, a4) -> (a4, a1, a2, a3).
    """
    a = np.asarray(a, dtype=np.float64)
    return np.roll(a, 1)


# ---------------------------------------------------------------------------
# Lookup table over (elongation, orientation), unit size.


@dataclass(frozen=True)
class ScaleLut:
    """Solver results on a geometric elongation x orientation grid.

    ``entries[i, j]`` is the optimal scale-vector for unit size,
    elongation rho_grid[i] and orientation phi_grid[j]; phi covers one
    quarter turn with cell-centred nodes, the rest follows by symmetry.
    """

    rho_grid: np.ndarray
    phi_grid: np.ndarray
    entries: np.ndarray

    @property
    def rho_max(self) -> float:
        return float(self.rho_grid[-1])


def build_lut(
    n_rho: int = 64,
    n_phi: int = 64,
    rho_max: float = 5.8,
    eps: float = 1e-6,
    check_tol: float = 1e-9,
) -> ScaleLut:
    """Solve the moment-matching problem on the whole grid.

    Every entry is verified to reproduce its target covariance to
    ``check_tol`` relative Frobenius error before the table is
    returned.
    """
    if n_rho < 2 or n_phi < 2:
        raise ValueError("grid needs at least 2 points per axis")
    if not 1.0 < rho_max < 3.0 + 2.0 * math.sqrt(2.0):
        raise ValueError("rho_max must lie in (1, 3 + 2*sqrt(2))")
    rho_grid = np.exp(np.linspace(0.0, math.log(rho_max), n_rho))
    rho_grid[0] = 1.0
    phi_grid = (np.arange(n_phi) + 0.5) * (0.25 * math.pi / n_phi)
    entries = np.empty((n_rho, n_phi, 4))
    for i, rho in enumerate(rho_grid):
        for j, phi in enumerate(phi_grid):
            target = covariance_from_params(1.0, float(rho), float(phi))
            a = optimize_scale_vector(target, eps)
            err = np.linalg.norm(covariance_of(a) - target) / np.linalg.norm(target)
            if err > check_tol:
                raise RuntimeError(
                    f"entry ({i}, {j}): covariance error {err:.3e} exceeds {check_tol:.1e}"
                )
            entries[i, j] = a
    return ScaleLut(rho_grid, phi_grid, entries)


# Cyclic-shift index table: row q holds the source component for each
# output component after q quarter turns.
_ROLL_IDX = np.array([[(k - q) % 4 for k in range(4)] for q in range(4)])


def lookup_many(lut: ScaleLut, size, elongation, orientation) -> np.ndarray:
    """Vectorised bilinear lookup; see ``lookup`` for the contract."""
    size = np.asarray(size, dtype=np.float64)
    rho = np.asarray(elongation, dtype=np.float64)
    theta = np.asarray(orientation, dtype=np.float64)
    shape = np.broadcast_shapes(size.shape, rho.shape, theta.shape)
    size = np.broadcast_to(size, shape)
    rho = np.broadcast_to(rho, shape)
    theta = np.broadcast_to(theta, shape)
    if np.any(size <= 0.0) or not np.all(np.isfinite(size)):
        raise ValueError("size must be positive and finite")
    if np.any(rho < 1.0) or not np.all(np.isfinite(rho)):
        raise ValueError("elongation must be >= 1 and finite")
    if np.any((theta < 0.0) | (theta >= math.pi)):
        raise ValueError("orientation must lie in [0, pi)")
    if np.any(rho > lut.rho_max * (1.0 + 1e-12)):
        raise OutOfGrid(
            f"elongation beyond table maximum {lut.rho_max:.6g}"
        )
    rho = np.minimum(rho, lut.rho_max)

    quarter = 0.25 * math.pi
    q = np.minimum((theta // quarter).astype(np.int64), 3)
    phi = theta - q * quarter

    n_rho = lut.rho_grid.shape[0]
    n_phi = lut.phi_grid.shape[0]
    u = np.log(rho) / math.log(lut.rho_max) * (n_rho - 1)
    v = phi / quarter * n_phi - 0.5
    u = np.clip(u, 0.0, n_rho - 1.0)
    v = np.clip(v, 0.0, n_phi - 1.0)
    i0 = np.minimum(u.astype(np.int64), n_rho - 2)
    j0 = np.minimum(v.astype(np.int64), n_phi - 2)
    fu = (u - i0)[..., None]
    fv = (v - j0)[..., None]

    e = lut.entries
    mix = (
        e[i0, j0] * (1.0 - fu) * (1.0 - fv)
        + e[i0 + 1, j0] * fu * (1.0 - fv)
        + e[i0, j0 + 1] * (1.0 - fu) * fv
        + e[i0 + 1, j0 + 1] * fu * fv
    )
    rolled = np.take_along_axis(
        mix, np.broadcast_to(_ROLL_IDX[q], mix.shape), axis=-1
    )
    return rolled * np.sqrt(size)[..., None]


def lookup(lut: ScaleLut, size: float, elongation: float, orientation: float) -> np.ndarray:
    """Approximate optimal scale-vector from the precomputed grid.

    The orientation folds into [0, pi/4) by quarter turns (undone on
    the result by cyclic shifts), the elongation interpolates
    geometrically, the size scales the result by sqrt(size).  Exact at
    grid nodes; between nodes the bilinear blend introduces a small
    covariance error.  Raises OutOfGrid above the table's maximum
    elongation.
    """
    return lookup_many(lut, float(size), float(elongation), float(orientation))


def save_lut(lut: ScaleLut, path) -> None:
    """Serialise a table: magic, version, grid sizes, grids, entries.

    All integers are little-endian u32, all floats little-endian f64;
    entries are row-major with orientation fastest and the four
    components innermost.  The write is atomic.
    """
    n_rho = lut.rho_grid.shape[0]
    n_phi = lut.phi_grid.shape[0]
    blob = bytearray()
    blob += LUT_MAGIC
    blob += struct.pack("<III", LUT_VERSION, n_rho, n_phi)
    blob += lut.rho_grid.astype("<f8").tobytes()
    blob += lut.phi_grid.astype("<f8").tobytes()
    blob += np.ascontiguousarray(lut.entries, dtype="<f8").tobytes()
    atomic_write_bytes(path, bytes(blob))


def load_lut(path) -> ScaleLut:
    """Read a table written by ``save_lut``, validating the layout."""
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 16 or data[:4] != LUT_MAGIC:
        raise ValueError("not a scale lookup table (bad magic)")
    version, n_rho, n_phi = struct.unpack_from("<III", data, 4)
    if version != LUT_VERSION:
        raise ValueError(f"unsupported table version {version}")
    need = 16 + 8 * (n_rho + n_phi + n_rho * n_phi * 4)
    if len(data) != need:
        raise ValueError(f"truncated table: {len(data)} bytes, expected {need}")
    off = 16
    rho_grid = np.frombuffer(data, "<f8", n_rho, off).copy()
    off += 8 * n_rho
    phi_grid = np.frombuffer(data, "<f8", n_phi, off).copy()
    off += 8 * n_phi
    entries = (
        np.frombuffer(data, "<f8", n_rho * n_phi * 4, off)
        .reshape(n_rho, n_phi, 4)
        .copy()
    )
    if np.any(np.diff(rho_grid) <= 0.0) or np.any(np.diff(phi_grid) <= 0.0):
        raise ValueError("table grids must be strictly increasing")
    if np.any(entries <= 0.0) or not np.all(np.isfinite(entries)):
        raise ValueError("table entries must be positive and finite")
    return ScaleLut(rho_grid, phi_grid, entries)
