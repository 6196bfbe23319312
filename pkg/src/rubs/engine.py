"""O(1)-per-pixel space-variant filtering engine.

The pipeline has two stages:

1. ``preintegrate``: four running-sum sweeps (along x, the up-right
   diagonal, y, and the up-left diagonal) turn the image into a plane
   of coefficients whose unit-element expansion equals the image's
   iterated running integral.  This is scale-independent and costs a
   handful of additions per pixel.

2. ``_apply_mesh``: for each output pixel, the filtered value is a
   signed sum over the 16 vertices of a scale-dependent finite
   difference mesh, each vertex being one interpolated read of the
   pre-integrated plane.  Kernel size, elongation and orientation are
   set per pixel through the scale-vector field; the work per pixel
   does not depend on any of them.

The equivalence (pipeline output == direct convolution with the
sampled kernel under zero padding) is exact in exact arithmetic; the
oracle tests drive the comparison numerically.  To keep it exact at
the borders too, the running sums run on a canvas extended far enough
that every dependency chain of the diagonal sweeps either stays inside
or starts in an all-zero region.

Precision: the running sums grow with image size and everything is
recovered by cancellation, so the plane magnitude is guarded against
2^53 where float64 stops resolving unit differences.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .geometry import as_scale_vector
from .zp import IntegratedImage, interpolate

__all__ = [
    "SCALE_FLOOR",
    "FdMesh",
    "ScaleField",
    "fd_mesh",
    "preintegrate",
    "filter_space_variant",
    "filter_space_invariant",
    "average_1d",
    "thread_cap",
]

_SQRT2 = math.sqrt(2.0)

# Scales below this are clamped up: the finite-difference weights blow
# up like 1/(a1 a2 a3 a4) and the sampled kernel degenerates anyway.
SCALE_FLOOR = 0.05

# Running-sum magnitude above which unit-level cancellation dies.
_GUARD = float(2**53)


class FdMesh(NamedTuple):
    """Finite-difference mesh of one kernel: 16 vertices with signs.

    ``offsets[i]`` is the position subtracted from the pixel's base
    read point, ``signs[i]`` the +-1 weight sign, ``weight`` the
    common magnitude 1/(a1 a2 a3 a4), and ``shift`` the centring
    offset added to the pixel position before the vertex offsets.
    """

    offsets: np.ndarray
    signs: np.ndarray
    weight: float
    shift: np.ndarray


# Bit patterns of the 16 mesh vertices: column k says whether box k's
# width enters vertex i.
_BITS = ((np.arange(16)[:, None] >> np.arange(4)[None, :]) & 1).astype(np.float64)
_SIGNS = np.where(_BITS.sum(axis=1) % 2 == 0, 1.0, -1.0)


def fd_mesh(a) -> FdMesh:
    """Mesh geometry for one scale-vector."""
    a = as_scale_vector(a)
    a1, a2, a3, a4 = a
    p2 = a2 / _SQRT2
    p4 = a4 / _SQRT2
    off_x = _BITS[:, 0] * a1 + _BITS[:, 1] * p2 - _BITS[:, 3] * p4
    off_y = _BITS[:, 1] * p2 + _BITS[:, 2] * a3 + _BITS[:, 3] * p4
    tau1 = 0.5 * a1 + 0.5 * (p2 - p4) - 0.5
    tau2 = 0.5 * a3 + 0.5 * (p2 + p4) - 1.5
    return FdMesh(
        offsets=np.stack([off_x, off_y], axis=-1),
        signs=_SIGNS.copy(),
        weight=1.0 / (a1 * a2 * a3 * a4),
        shift=np.array([tau1, tau2]),
    )


@dataclass(frozen=True)
class ScaleField:
    """Per-pixel scale-vectors, shape (H, W, 4), all entries positive."""

    scales: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.scales, dtype=np.float64)
        if s.ndim != 3 or s.shape[2] != 4:
            raise ValueError(f"scale field must be (H, W, 4), got {s.shape}")
        if not np.all(np.isfinite(s)) or np.any(s <= 0.0):
            raise ValueError("scale field entries must be finite and positive")
        object.__setattr__(self, "scales", s)

    @classmethod
    def uniform(cls, shape, a) -> "ScaleField":
        a = as_scale_vector(a)
        h, w = shape
        return cls(np.broadcast_to(a, (h, w, 4)).copy())

    @property
    def shape(self):
        return self.scales.shape[:2]


def thread_cap() -> int:
    """Worker cap from RUBS_THREADS (0 or unset means automatic).

    The current engine is single-threaded numpy, which satisfies the
    determinism contract for any cap; the value is still validated
    here so misconfiguration fails fast.
    """
    raw = os.environ.get("RUBS_THREADS", "0")
    try:
        cap = int(raw)
    except ValueError:
        raise ValueError(f"RUBS_THREADS must be an integer, got {raw!r}") from None
    if cap < 0:
        raise ValueError(f"RUBS_THREADS must be >= 0, got {cap}")
    return cap


def preintegrate(
    f,
    *,
    col0: int = 0,
    row0: int = 0,
    need_cols=None,
    need_rows=None,
) -> IntegratedImage:
    """Run the four running-sum sweeps over an extended canvas.

    ``f[r, c]`` sits at lattice point (col0 + c, row0 + r) and the
    image is zero outside.  The returned plane holds coefficients that
    are exact (as if the sums had run over the whole plane) for every
    lattice point inside the requested column/row ranges, inclusive.

    The fourth sweep accumulates along up-left diagonals, so its value
    at (n1, n2) depends on columns up to n1 + n2 + 1; the canvas is
    widened accordingly, and rows below the image stay identically
    zero so every diagonal chain terminates correctly.
    """
    f = np.asarray(f, dtype=np.float64)
    if f.ndim != 2:
        raise ValueError("image must be 2-D")
    h, w = f.shape
    if need_cols is None:
        need_cols = (col0 - 2, col0 + w + 1)
    if need_rows is None:
        need_rows = (row0 - 2, row0 + h + 1)

    c_lo = min(int(need_cols[0]), col0)
    r_lo = min(int(need_rows[0]), row0 - 1)
    r_hi = max(int(need_rows[1]), row0 + h - 1)
    c_hi = max(int(need_cols[1]), col0 + w - 1) + (r_hi - row0) + 1

    plane = np.zeros((r_hi - r_lo + 1, c_hi - c_lo + 1))
    plane[row0 - r_lo : row0 - r_lo + h, col0 - c_lo : col0 - c_lo + w] = f

    # Sweeps touch only rows at and above the image; below it all four
    # sums are zero because the input is.
    g = plane[row0 - r_lo :]

    np.cumsum(g, axis=1, out=g)  # along +x
    g *= _SQRT2
    for r in range(1, g.shape[0]):  # along +x+y diagonals
        g[r, 1:] += g[r - 1, :-1]
    np.cumsum(g, axis=0, out=g)  # along +y
    g *= _SQRT2
    for r in range(1, g.shape[0]):  # along -x+y diagonals
        g[r, :-1] += g[r - 1, 1:]

    peak = float(np.abs(g).max()) if g.size else 0.0
    if peak >= _GUARD:
        raise OverflowError(
            f"running sums reached {peak:.3e}, beyond the 2^53 precision guard; "
            "split the image or reduce its dynamic range"
        )
    return IntegratedImage(plane, col0=c_lo, row0=r_lo)


def _as_field_array(field, shape) -> np.ndarray:
    if isinstance(field, ScaleField):
        field = field.scales
    field = np.asarray(field, dtype=np.float64)
    if field.shape == (4,):
        field = np.broadcast_to(field, (*shape, 4))
    if field.shape != (*shape, 4):
        raise ValueError(
            f"scale field shape {field.shape} does not match image {shape}"
        )
    if not np.all(np.isfinite(field)):
        raise ValueError("scale field entries must be finite")
    return field


def _mesh_pieces(field):
    a1 = field[..., 0]
    a2 = field[..., 1]
    a3 = field[..., 2]
    a4 = field[..., 3]
    p2 = a2 / _SQRT2
    p4 = a4 / _SQRT2
    tau1 = 0.5 * a1 + 0.5 * (p2 - p4) - 0.5
    tau2 = 0.5 * a3 + 0.5 * (p2 + p4) - 1.5
    weight = 1.0 / (a1 * a2 * a3 * a4)
    return a1, a3, p2, p4, tau1, tau2, weight


def _apply_mesh(image: IntegratedImage, field, pix_cols, pix_rows) -> np.ndarray:
    """Finite-difference stage: 16 interpolated reads per pixel."""
    a1, a3, p2, p4, tau1, tau2, weight = _mesh_pieces(field)
    xb = pix_cols[None, :] + tau1
    yb = pix_rows[:, None] + tau2
    out = np.zeros(field.shape[:2])
    for i in range(16):
        q1, q2, q3, q4 = _BITS[i]
        x = xb - (q1 * a1 + q2 * p2 - q4 * p4)
        y = yb - (q2 * p2 + q3 * a3 + q4 * p4)
        out += _SIGNS[i] * interpolate(image, x, y)
    out *= weight
    return out


def _read_margins(field):
    """Per-side integer margins covering every read of the FD stage.

    Interpolation touches lattice neighbours within +-2 of any read
    point, hence the constant slack.
    """
    a1, a3, p2, p4, tau1, tau2, _ = _mesh_pieces(field)
    lo1 = float((tau1 - a1 - p2).min())
    hi1 = float((tau1 + p4).max())
    lo2 = float((tau2 - a3 - p2 - p4).min())
    hi2 = float(tau2.max())
    left = max(0, math.ceil(-lo1) + 2)
    right = max(0, math.ceil(hi1) + 2)
    below = max(0, math.ceil(-lo2) + 2)
    above = max(0, math.ceil(hi2) + 2)
    return left, right, below, above


def filter_space_variant(f, field, iterations: int = 1) -> np.ndarray:
    """Filter with a per-pixel kernel in constant time per pixel.

    Parameters
    ----------
    f : array_like
        2-D image; combined with zero outside its bounds.
    field : ScaleField, (H, W, 4) array, or (4,) vector
        Scale-vector per pixel.  Entries below SCALE_FLOOR are clamped
        up to it.
    iterations : int
        Repeated smoothing: the field is divided by sqrt(iterations)
        and the filter applied that many times, keeping the overall
        covariance; intermediate passes run on extended canvases so
        the result equals the exact repeated convolution.

    Returns
    -------
    ndarray, float64, same shape as f.
    """
    f = np.asarray(f, dtype=np.float64)
    if f.ndim != 2:
        raise ValueError("image must be 2-D")
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    h, w = f.shape
    field = _as_field_array(field, (h, w))
    field = np.maximum(field, SCALE_FLOOR)
    field = field / math.sqrt(iterations)

    left, right, below, above = _read_margins(field)
    cur = f
    col0 = row0 = 0
    for p in range(iterations):
        remain = iterations - 1 - p
        pc_lo = -remain * left
        pr_lo = -remain * below
        pw = w + remain * (left + right)
        ph = h + remain * (below + above)
        pix_cols = np.arange(pc_lo, pc_lo + pw, dtype=np.float64)
        pix_rows = np.arange(pr_lo, pr_lo + ph, dtype=np.float64)
        fpad = np.pad(
            field,
            (
                (remain * below, remain * above),
                (remain * left, remain * right),
                (0, 0),
            ),
            mode="edge",
        )
        image = preintegrate(
            cur,
            col0=col0,
            row0=row0,
            need_cols=(pc_lo - left, pc_lo + pw - 1 + right),
            need_rows=(pr_lo - below, pr_lo + ph - 1 + above),
        )
        cur = _apply_mesh(image, fpad, pix_cols, pix_rows)
        col0, row0 = pc_lo, pr_lo
    return cur


def filter_space_invariant(f, a, iterations: int = 1) -> np.ndarray:
    """Uniform-kernel filtering; bit-identical to the variant path.

    Implemented as the space-variant filter over a constant field so
    the two entry points cannot drift apart.
    """
    f = np.asarray(f, dtype=np.float64)
    if f.ndim != 2:
        raise ValueError("image must be 2-D")
    return filter_space_variant(f, as_scale_vector(a), iterations)


def average_1d(f, a) -> np.ndarray:
    """1-D space-variant box average by running sum and two reads.

    ``a`` is a positive width per output sample (or a scalar).  The
    n-th output is the difference of the cumulative sum read at
    n + tau and n + tau - a[n], tau = (a[n] - 1) / 2, divided by a[n];
    reads left of the signal see 0 and reads right of it clamp, which
    encodes zero padding.  With a == 1 the input is returned exactly.
    """
    f = np.asarray(f, dtype=np.float64)
    if f.ndim != 1:
        raise ValueError("signal must be 1-D")
    n = f.shape[0]
    a = np.broadcast_to(np.asarray(a, dtype=np.float64), (n,))
    if np.any(a <= 0.0) or not np.all(np.isfinite(a)):
        raise ValueError("widths must be positive and finite")
    g = np.cumsum(f)

    def read(x):
        idx = np.ceil(x - 0.5).astype(np.int64)
        vals = g[np.clip(idx, 0, n - 1)]
        return np.where(idx < 0, 0.0, vals)

    pos = np.arange(n, dtype=np.float64)
    tau = 0.5 * (a - 1.0)
    return (read(pos + tau) - read(pos + tau - a)) / a
