"""Exact evaluation of the four-direction kernel by polygon slicing.

The kernel with scale-vector a = (a1, a2, a3, a4) is the convolution of
four 1-D box distributions aimed along 0, 45, 90 and 135 degrees.  Its
value at a point equals the area of the intersection between

  * the axis-aligned rectangle  [x1 - a1/2, x1 + a1/2] x [x2 - a3/2, x2 + a3/2]
    (the two axis boxes centred on the evaluation point), and
  * the diamond  |y1 + y2| <= a2/sqrt(2),  |y1 - y2| <= a4/sqrt(2)
    (the two diagonal boxes, centred on the origin),

divided by a1*a2*a3*a4.  The intersection is a convex polygon, so the
area can be computed by integrating slice lengths over y2.  The slice
length is piecewise linear in y2 with at most six interior breakpoints;
summing exact trapezoid / cut-triangle pieces between consecutive
breakpoints gives the area to machine precision.  Everything below is
vectorised over arbitrary arrays of evaluation points.
"""

from __future__ import annotations

import numpy as np

__all__ = ["kernel_values"]

_SQRT2 = np.sqrt(2.0)


def kernel_values(a, x1, x2):
    """Evaluate the four-direction kernel exactly at the given points.

    Parameters
    ----------
    a : array_like
        Scale-vector, broadcastable against the points with a trailing
        axis of length 4 (a single (4,) vector is the common case).
    x1, x2 : array_like
        Evaluation coordinates, broadcast together.

    Returns
    -------
    ndarray
        Kernel values, same broadcast shape as ``x1 * x2``.  Exact up to
        floating point rounding; in particular points outside the
        octagonal support come back as exactly 0.0.
    """
    a = np.asarray(a, dtype=np.float64)
    x1 = np.asarray(x1, dtype=np.float64)
    x2 = np.asarray(x2, dtype=np.float64)
    a1 = a[..., 0]
    a2 = a[..., 1]
    a3 = a[..., 2]
    a4 = a[..., 3]

    # Rectangle bounds along y1 / y2 and diamond half-widths.
    rx0 = x1 - 0.5 * a1
    rx1 = x1 + 0.5 * a1
    ry0 = x2 - 0.5 * a3
    ry1 = x2 + 0.5 * a3
    hs = a2 / _SQRT2  # |y1 + y2| <= hs
    hd = a4 / _SQRT2  # |y1 - y2| <= hd

    # Breakpoints of the slice-length function m(t), t running along y2:
    # every pairwise crossing of the three upper bounds and of the three
    # lower bounds, clipped into the integration interval.
    nodes = np.stack(
        np.broadcast_arrays(
            hs - rx1,
            rx1 - hd,
            0.5 * (hs - hd),
            -hs - rx0,
            rx0 + hd,
            0.5 * (hd - hs),
            ry0,
            ry1,
        ),
        axis=-1,
    )
    np.clip(nodes, ry0[..., None], ry1[..., None], out=nodes)
    nodes.sort(axis=-1)

    t = nodes
    upper = np.minimum(np.minimum(rx1[..., None], hs[..., None] - t), t + hd[..., None])
    lower = np.maximum(np.maximum(rx0[..., None], -hs[..., None] - t), t - hd[..., None])
    m = upper - lower  # slice length before clamping at zero, linear per gap

    m0 = m[..., :-1]
    m1 = m[..., 1:]
    w = t[..., 1:] - t[..., :-1]

    both = 0.5 * (m0 + m1) * w
    # Sign change inside a gap: only the triangle on the positive side counts.
    with np.errstate(divide="ignore", invalid="ignore"):
        cut0 = 0.5 * m0 * m0 * w / (m0 - m1)
        cut1 = 0.5 * m1 * m1 * w / (m1 - m0)
    pieces = np.where(
        (m0 >= 0.0) & (m1 >= 0.0),
        both,
        np.where(
            (m0 > 0.0) & (m1 < 0.0),
            cut0,
            np.where((m1 > 0.0) & (m0 < 0.0), cut1, 0.0),
        ),
    )
    area = pieces.sum(axis=-1)
    return area / (a1 * a2 * a3 * a4)
