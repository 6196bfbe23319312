"""Piecewise-quadratic interpolation of pre-integrated planes.

The engine's pre-integration stage produces a plane of coefficients
g[n] such that the running integral it represents is

    F(x) = sum_n g[n] * Z(x - n)

where Z is the unit four-direction element with widths (1, sqrt(2), 1,
sqrt(2)).  Z is C1, supported on a small octagon, and piecewise
quadratic; inside any unit cell its breakpoints are only the two
diagonal lines through the cell centre.  Evaluating F at an arbitrary
point therefore needs exactly seven neighbouring coefficients and a
quadratic polynomial per cell quadrant:

* nearest lattice point x0 = floor(x + 0.5), residual d = x0 - x,
* quadrant index q = 2 * (d1 + d2 >= 0) + (d1 - d2 >= 0), i.e. the
  position of d relative to the two diagonal cuts,
* F(x) = sum over the quadrant's seven offsets of
  g[x0 + offset] * P_{q,offset}(d1, d2).

The 4 x 7 table of quadratic polynomials is generated at first use by
least-squares fitting against the exact polygon-slice evaluator; the
offsets themselves are detected from support overlap rather than being
hard-coded.  The fit is exact up to rounding because each region really
is a single quadratic piece, and the residual check would fail loudly
if the partition geometry were wrong.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ._exact import kernel_values

__all__ = [
    "UNIT_SCALES",
    "IntegratedImage",
    "ZpTable",
    "polynomial_table",
    "partition_index",
    "zp_eval",
    "interpolate",
    "dump_polynomial_table",
]

# Widths of the unit interpolation element, one per direction.
UNIT_SCALES = np.array([1.0, np.sqrt(2.0), 1.0, np.sqrt(2.0)])

# Residual bound enforced on the table fit.
FIT_TOL = 1e-10


@dataclass(frozen=True)
class IntegratedImage:
    """Pre-integrated plane plus the lattice position of plane[0, 0].

    plane[r, c] is the coefficient at lattice point
    (n1, n2) = (col0 + c, row0 + r).
    """

    plane: np.ndarray
    col0: int = 0
    row0: int = 0


class ZpTable(NamedTuple):
    """Offsets (4, 7, 2) and quadratic coefficients (4, 7, 6).

    Coefficient order: 1, d1, d2, d1^2, d1*d2, d2^2.
    """

    offsets: np.ndarray
    coeffs: np.ndarray


_TABLE: ZpTable | None = None


def partition_index(d1, d2):
    """Cell quadrant of the residual d = nearest_lattice - x."""
    return 2 * (np.asarray(d1) + d2 >= 0.0).astype(np.int8) + (
        np.asarray(d1) - d2 >= 0.0
    ).astype(np.int8)


def _build_table(step: float = 1e-3) -> ZpTable:
    # Sample residuals at cell centres of a step-sized grid over the
    # unit cell; centres stay clear of the diagonal cuts.
    g = np.arange(-0.5 + 0.5 * step, 0.5, step)
    D1, D2 = np.meshgrid(g, g, indexing="ij")
    d1 = D1.ravel()
    d2 = D2.ravel()
    part = partition_index(d1, d2)

    cand = [(dx, dy) for dx in range(-2, 3) for dy in range(-2, 3)]
    offsets = np.zeros((4, 7, 2), dtype=np.int64)
    coeffs = np.zeros((4, 7, 6))
    for p in range(4):
        sel = part == p
        d1p = d1[sel]
        d2p = d2[sel]
        # Offset detection on a thinned subset: the element at lattice
        # point x0 + m is felt at x iff Z(m + d) is nonzero somewhere
        # in the quadrant.
        thin = slice(None, None, 37)
        active = [
            m
            for m in cand
            if kernel_values(
                UNIT_SCALES, m[0] + d1p[thin], m[1] + d2p[thin]
            ).max()
            > 1e-9
        ]
        if len(active) != 7:
            raise RuntimeError(
                f"quadrant {p}: expected 7 active offsets, found {len(active)}"
            )
        active.sort(key=lambda m: (m != (0, 0), m))
        offsets[p] = active

        design = np.stack(
            [np.ones_like(d1p), d1p, d2p, d1p * d1p, d1p * d2p, d2p * d2p],
            axis=-1,
        )
        targets = np.stack(
            [kernel_values(UNIT_SCALES, m[0] + d1p, m[1] + d2p) for m in active],
            axis=-1,
        )
        sol, *_ = np.linalg.lstsq(design, targets, rcond=None)
        resid = np.abs(design @ sol - targets).max()
        if resid > FIT_TOL:
            raise RuntimeError(f"quadrant {p}: fit residual {resid:.3e} too large")
        coeffs[p] = sol.T
    return ZpTable(offsets, coeffs)


def polynomial_table() -> ZpTable:
    """The cached 4 x 7 quadratic table, built on first use."""
    global _TABLE
    if _TABLE is None:
        _TABLE = _build_table()
    return _TABLE


def _poly(c, d1, d2):
    # c has the 6 coefficients in order 1, d1, d2, d1^2, d1 d2, d2^2.
    return c[0] + d1 * (c[1] + c[3] * d1 + c[4] * d2) + d2 * (c[2] + c[5] * d2)


def zp_eval(x1, x2):
    """Value of the unit element Z at arbitrary points, via the table.

    Identical (to rounding) with the exact geometric evaluation; used
    as the fast path and cross-checked against it in the tests.
    """
    x1 = np.asarray(x1, dtype=np.float64)
    x2 = np.asarray(x2, dtype=np.float64)
    shape = np.broadcast_shapes(x1.shape, x2.shape)
    x1 = np.broadcast_to(x1, shape).ravel()
    x2 = np.broadcast_to(x2, shape).ravel()
    tab = polynomial_table()

    n1 = np.floor(x1 + 0.5).astype(np.int64)
    n2 = np.floor(x2 + 0.5).astype(np.int64)
    d1 = n1 - x1
    d2 = n2 - x2
    part = partition_index(d1, d2)
    out = np.zeros(x1.shape)
    for p in range(4):
        sel = part == p
        if not sel.any():
            continue
        for j in range(7):
            dx, dy = tab.offsets[p, j]
            # Z's own lattice point is 0: only the offset mapping x0 to
            # the origin contributes.
            hit = sel & (n1 == -dx) & (n2 == -dy)
            if hit.any():
                out[hit] = _poly(tab.coeffs[p, j], d1[hit], d2[hit])
    return out.reshape(shape)


def interpolate(image: IntegratedImage, x1, x2) -> np.ndarray:
    """Evaluate F(x) = sum_n g[n] Z(x - n) at arbitrary points.

    Points are given in lattice coordinates.  Reads that fall outside
    the stored plane clamp to the nearest edge sample; callers that
    need exact values must size the plane so all seven neighbours of
    every query stay inside (the filtering engine does).
    """
    x1 = np.asarray(x1, dtype=np.float64)
    x2 = np.asarray(x2, dtype=np.float64)
    shape = np.broadcast_shapes(x1.shape, x2.shape)
    x1f = np.broadcast_to(x1, shape).ravel()
    x2f = np.broadcast_to(x2, shape).ravel()
    tab = polynomial_table()
    plane = image.plane
    h, w = plane.shape
    flat = plane.ravel()

    n1 = np.floor(x1f + 0.5).astype(np.int64)
    n2 = np.floor(x2f + 0.5).astype(np.int64)
    d1 = n1 - x1f
    d2 = n2 - x2f
    cb = n1 - image.col0
    rb = n2 - image.row0
    part = 2 * (d1 + d2 >= 0.0).astype(np.int64) + (d1 - d2 >= 0.0)

    out = np.empty(x1f.shape)
    for p in range(4):
        sel = np.nonzero(part == p)[0]
        if sel.size == 0:
            continue
        d1s = d1[sel]
        d2s = d2[sel]
        cs = cb[sel]
        rs = rb[sel]
        acc = np.zeros(sel.size)
        for j in range(7):
            dx, dy = tab.offsets[p, j]
            cc = np.clip(cs + dx, 0, w - 1)
            rr = np.clip(rs + dy, 0, h - 1)
            acc += _poly(tab.coeffs[p, j], d1s, d2s) * flat[rr * w + cc]
        out[sel] = acc
    return out.reshape(shape)


def dump_polynomial_table() -> str:
    """Human-readable dump of the fitted table, for diffing and debug."""
    tab = polynomial_table()
    lines = ["zp-quadratic-table v1"]
    for p in range(4):
        for j in range(7):
            dx, dy = tab.offsets[p, j]
            cs = " ".join(f"{c:.17g}" for c in tab.coeffs[p, j])
            lines.append(f"{p} {dx} {dy} {cs}")
    return "\n".join(lines) + "\n"
