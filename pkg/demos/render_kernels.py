"""Render a gallery of steerable kernels and check their moments.

Walks a small grid of (size, elongation, orientation) targets, solves
each one for a scale-vector, samples the kernel on a fine grid, and
writes a PGM contact sheet next to this script.  Printed alongside:
the scale-vector, the worst covariance error, and the correlation
with the target Gaussian.

Run:  python3 demos/render_kernels.py
"""

import math
import pathlib

import numpy as np

from rubs import covariance_from_params, optimize_scale_vector
from rubs.oracle import gaussian_correlation, numeric_moments, synthesize_kernel
from rubs.pgmio import quantize, write_pgm

OUT = pathlib.Path(__file__).parent / "out"

SIZES = (2.0, 6.0)
ELONGATIONS = (1.0, 2.5, 5.0)
ORIENTATION = 0.5  # radians, counter-clockwise from the first axis


def render(size, rho, theta, px=129):
    c = covariance_from_params(size, rho, theta)
    a = optimize_scale_vector(c)
    extent = 6.0
    step = 2.0 * extent / (px - 1)
    kernel = synthesize_kernel(a, step=step, extent=extent)
    mom = numeric_moments(kernel)
    cov_err = np.abs(mom.covariance - c).max()
    corr = gaussian_correlation(kernel, c)
    print(
        f"size {size:4.1f}  rho {rho:3.1f}  theta {theta:.2f}  "
        f"a = [{a[0]:.3f} {a[1]:.3f} {a[2]:.3f} {a[3]:.3f}]  "
        f"cov err {cov_err:.1e}  gauss corr {corr:.4f}"
    )
    v = kernel.values
    return v[: px, : px] if v.shape[0] >= px else np.pad(v, 1)


def main():
    OUT.mkdir(exist_ok=True)
    tiles = []
    for size in SIZES:
        row = [render(size, rho, ORIENTATION) for rho in ELONGATIONS]
        tiles.append(row)
    hpad = np.zeros((tiles[0][0].shape[0], 8))
    rows = []
    for row in tiles:
        cells = []
        for tile in row:
            cells.extend([tile / tile.max(), hpad])
        rows.append(np.hstack(cells[:-1]))
    vpad = np.zeros((8, rows[0].shape[1]))
    sheet = np.vstack([rows[0], vpad, rows[1]])
    path = OUT / "kernel_gallery.pgm"
    write_pgm(path, quantize(sheet * 255.0))
    print(f"wrote {path}")


if __name__ == "__main__":
    main()
