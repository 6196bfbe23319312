"""Slow reference constructions used to validate the fast paths.

Nothing in this module is meant for production use.  The routines here
build kernels and filter images by brute force, with accuracy limited
only by quadrature, so that the running-sum engine, the interpolation
table and the moment solver can all be checked against something that
was derived by a different route:

* ``sample_kernel_exact`` evaluates the four-direction kernel through
  exact polygon-slice integration (no tables, no recursions),
* ``synthesize_kernel`` builds a sampled kernel for any number of
  directions and passes from its Fourier transform (product of sinc
  factors, alias-folded, inverse DFT),
* ``dense_convolve`` filters an image by direct per-pixel summation
  with per-pixel kernels,
* ``numeric_moments`` integrates moments on the sample grid,
* ``moment_closed_forms`` gives analytic fourth moments to compare
  those integrals against.

The two kernel constructions are independent of each other, which is
what keeps the cross-checks honest.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from ._exact import kernel_values as sample_kernel_exact
from .geometry import as_scale_vector, covariance_general, direction_vectors

__all__ = [
    "SampledKernel",
    "MomentSummary",
    "sample_kernel_exact",
    "uniform_scales",
    "synthesize_kernel",
    "kernel_coords",
    "dense_convolve",
    "numeric_moments",
    "moment_closed_forms",
    "closed_form_l_matrix",
    "gaussian_density",
    "gaussian_correlation",
    "l2_distance_to_gaussian",
]

_SQRT2 = math.sqrt(2.0)


class SampledKernel(NamedTuple):
    """Kernel sampled on a centred square grid.

    ``values[i, j]`` is the kernel at x1 = (j - n//2) * step,
    x2 = (i - n//2) * step, matching image row/column order.
    """

    values: np.ndarray
    step: float

    @property
    def mass(self) -> float:
        return float(self.values.sum() * self.step * self.step)


class MomentSummary(NamedTuple):
    mass: float
    covariance: np.ndarray
    fourth: tuple  # (m40, m31, m22, m13, m04)


def uniform_scales(n: int, sigma: float) -> np.ndarray:
    """Scales making the n-direction kernel's covariance sigma^2 * I."""
    return np.full(n, sigma * math.sqrt(24.0 / n))


def _support_half_extents(scales, iterations: int):
    u = direction_vectors(len(scales))
    s = np.asarray(scales, dtype=np.float64)
    hx = 0.5 * iterations * float(np.sum(s * np.abs(u[:, 0])))
    hy = 0.5 * iterations * float(np.sum(s * np.abs(u[:, 1])))
    return hx, hy


def synthesize_kernel(
    scales,
    iterations: int = 1,
    *,
    step: float | None = None,
    extent: float | None = None,
    fold_radius: int | None = None,
) -> SampledKernel:
    """Sample an n-direction kernel (optionally convolved with itself).

    Parameters
    ----------
    scales : array_like
        One positive width per direction; len(scales) sets the number
        of directions, spread uniformly over half a turn.
    iterations : int
        Convolve the kernel with itself this many times in total.
    step : float, optional
        Grid spacing.  Default picks roughly 513 samples per axis.
    extent : float, optional
        Half-width of the sampled square.  Default is the kernel
        support half-width plus a 20 percent margin.
    fold_radius : int, optional
        How many alias copies of the spectrum to fold in per axis
        before the inverse DFT.  The default (1, or 3 for very few
        direction/pass combinations) leaves a zero-mean alias ripple
        of order 1e-7 at the default step; shrink ``step`` and raise
        ``fold_radius`` together when point values need to be tighter.
        Moments and correlations are far less sensitive than point
        values because the ripple alternates sign cell by cell.

    Notes
    -----
    The two-direction single-pass kernel is a plain axis-aligned box,
    discontinuous, and its sinc spectrum folds too slowly; that one
    case is evaluated in closed form instead, making it exact.
    """
    s = np.asarray(scales, dtype=np.float64)
    if s.ndim != 1 or s.shape[0] < 2:
        raise ValueError("need a 1-D list of at least two scales")
    if not np.all(np.isfinite(s)) or np.any(s <= 0.0):
        raise ValueError("scales must be finite and positive")
    if iterations < 1:
        raise ValueError("iterations must be >= 1")

    hx, hy = _support_half_extents(s, iterations)
    if extent is None:
        extent = 1.2 * max(hx, hy)
    if step is None:
        step = 2.0 * extent / 512.0
    n = int(round(2.0 * extent / step))
    if n % 2 == 0:
        n += 1
    c = n // 2
    x = (np.arange(n) - c) * step

    if s.shape[0] == 2 and iterations == 1:
        # Exact separable product of the two axis boxes.
        in1 = (np.abs(x) < 0.5 * s[0]) + 0.5 * (np.abs(np.abs(x) - 0.5 * s[0]) < 1e-15)
        in2 = (np.abs(x) < 0.5 * s[1]) + 0.5 * (np.abs(np.abs(x) - 0.5 * s[1]) < 1e-15)
        vals = np.outer(in2 / s[1], in1 / s[0])
        return SampledKernel(vals, step)

    if fold_radius is None:
        fold_radius = 3 if s.shape[0] * iterations <= 3 else 1

    u = direction_vectors(s.shape[0])
    w = 2.0 * math.pi * np.fft.fftfreq(n, d=step)
    spectrum = np.zeros((n, n))
    for r2 in range(-fold_radius, fold_radius + 1):
        w2 = w + r2 * 2.0 * math.pi / step  # row axis = x2
        for r1 in range(-fold_radius, fold_radius + 1):
            w1 = w + r1 * 2.0 * math.pi / step
            term = np.ones((n, n))
            for k in range(s.shape[0]):
                z = 0.5 * s[k] * (u[k, 0] * w1[None, :] + u[k, 1] * w2[:, None])
                term *= np.sinc(z / math.pi) ** iterations
            spectrum += term
    vals = np.fft.ifft2(spectrum).real / (step * step)
    vals = np.fft.fftshift(vals)
    return SampledKernel(vals, step)


def kernel_coords(kernel: SampledKernel):
    """1-D coordinate arrays (x1 along columns, x2 along rows)."""
    n = kernel.values.shape[0]
    x = (np.arange(n) - n // 2) * kernel.step
    return x, x


def dense_convolve(f, field, iterations: int = 1, *, scale_floor: float = 0.05) -> np.ndarray:
    """Filter by direct summation with a per-pixel exact kernel.

    ``field`` is (H, W, 4) or a single (4,) vector applied everywhere.
    Boundaries are zero-padded: contributions from outside the image
    are dropped, exactly like the fast engine.  With iterations > 1
    the passes run on canvases extended by the per-pass kernel support
    so the multi-pass result is the exact repeated convolution.

    Runtime is O(support area) per pixel; keep images small.
    """
    f = np.asarray(f, dtype=np.float64)
    if f.ndim != 2:
        raise ValueError("image must be 2-D")
    H, W = f.shape
    field = np.asarray(field, dtype=np.float64)
    if field.shape == (4,):
        field = np.broadcast_to(field, (H, W, 4)).copy()
    if field.shape != (H, W, 4):
        raise ValueError(f"scale field must be (H, W, 4), got {field.shape}")
    field = np.maximum(field, scale_floor)
    field = field / math.sqrt(iterations)

    # Per-side pixel support radius over the whole field.
    diag = (field[..., 1] + field[..., 3]) / _SQRT2
    rx = int(np.ceil(0.5 * float((field[..., 0] + diag).max()))) + 1
    ry = int(np.ceil(0.5 * float((field[..., 2] + diag).max()))) + 1

    cur = f
    top = left = 0  # offset of cur[0,0] relative to the original image
    for p in range(iterations):
        remain = iterations - 1 - p
        oh = H + 2 * ry * remain
        ow = W + 2 * rx * remain
        otop = ry * remain
        oleft = rx * remain
        out = np.zeros((oh, ow))
        ch, cw = cur.shape
        for i in range(oh):
            yi = i - otop  # row in original image coords
            fy = min(max(yi, 0), H - 1)
            for j in range(ow):
                xi = j - oleft
                fx = min(max(xi, 0), W - 1)
                a = field[fy, fx]
                arx = int(math.ceil(0.5 * (a[0] + (a[1] + a[3]) / _SQRT2))) + 1
                ary = int(math.ceil(0.5 * (a[2] + (a[1] + a[3]) / _SQRT2))) + 1
                # cur[r, c] lives at image coords (c - left, r - top)
                r0 = max(yi - ary + top, 0)
                r1 = min(yi + ary + top, ch - 1)
                c0 = max(xi - arx + left, 0)
                c1 = min(xi + arx + left, cw - 1)
                if r0 > r1 or c0 > c1:
                    continue
                rr = np.arange(r0, r1 + 1)
                cc = np.arange(c0, c1 + 1)
                dy = yi - (rr - top)
                dx = xi - (cc - left)
                vals = sample_kernel_exact(
                    a, dx[None, :].astype(float), dy[:, None].astype(float)
                )
                out[i, j] = float(np.sum(vals * cur[r0 : r1 + 1, c0 : c1 + 1]))
        cur = out
        top, left = otop, oleft
    return cur


def numeric_moments(kernel: SampledKernel) -> MomentSummary:
    """Mass, covariance and raw fourth moments by grid quadrature."""
    v = kernel.values
    h = kernel.step
    x1, x2 = kernel_coords(kernel)
    X1 = x1[None, :]
    X2 = x2[:, None]
    cell = h * h
    mass = float(v.sum() * cell)
    c11 = float((v * X1 * X1).sum() * cell)
    c12 = float((v * X1 * X2).sum() * cell)
    c22 = float((v * X2 * X2).sum() * cell)
    m40 = float((v * X1**4).sum() * cell)
    m31 = float((v * X1**3 * X2).sum() * cell)
    m22 = float((v * X1**2 * X2**2).sum() * cell)
    m13 = float((v * X1 * X2**3).sum() * cell)
    m04 = float((v * X2**4).sum() * cell)
    return MomentSummary(mass, np.array([[c11, c12], [c12, c22]]), (m40, m31, m22, m13, m04))


def moment_closed_forms(a):
    """Analytic raw fourth moments (m40, m31, m22, m13, m04).

    Derived by expanding E[(sum_k a_k t_k u_k)^4] for independent
    standard-box factors t_k with E t^2 = 1/12 and E t^4 = 1/80.  The
    mixed moment uses the form symmetric under swapping the two axis
    scales together with the two diagonal scales, which is the
    dimensionally consistent one.
    """
    a = as_scale_vector(a)
    p = a * a
    q = p * p
    mu4 = 1.0 / 80.0
    mu2 = 1.0 / 12.0
    m40 = 0.25 * mu4 * (4 * q[0] + q[1] + q[3]) + 0.5 * mu2**2 * (
        6 * p[0] * p[1] + 6 * p[0] * p[3] + 3 * p[1] * p[3]
    )
    m31 = 0.25 * mu4 * (q[1] - q[3]) + 1.5 * mu2**2 * p[0] * (p[1] - p[3])
    m22 = 0.25 * mu4 * (q[1] + q[3]) + 0.5 * mu2**2 * (
        p[0] * p[1]
        + p[0] * p[3]
        + p[1] * p[2]
        + p[2] * p[3]
        - p[1] * p[3]
        + 2 * p[0] * p[2]
    )
    m13 = 0.25 * mu4 * (q[1] - q[3]) + 1.5 * mu2**2 * p[2] * (p[1] - p[3])
    m04 = 0.25 * mu4 * (4 * q[2] + q[1] + q[3]) + 0.5 * mu2**2 * (
        6 * p[1] * p[2] + 6 * p[2] * p[3] + 3 * p[1] * p[3]
    )
    return m40, m31, m22, m13, m04


def closed_form_l_matrix(a) -> np.ndarray:
    """Analytic value of integral of |x|^2 x x^T times the kernel."""
    m40, m31, m22, m13, m04 = moment_closed_forms(a)
    return np.array([[m40 + m22, m31 + m13], [m31 + m13, m22 + m04]])


def gaussian_density(c, x1, x2) -> np.ndarray:
    """Bivariate centred Gaussian density with covariance c."""
    c = np.asarray(c, dtype=np.float64)
    det = c[0, 0] * c[1, 1] - c[0, 1] * c[1, 0]
    inv = np.array([[c[1, 1], -c[0, 1]], [-c[0, 1], c[0, 0]]]) / det
    quad = inv[0, 0] * x1 * x1 + 2.0 * inv[0, 1] * x1 * x2 + inv[1, 1] * x2 * x2
    return np.exp(-0.5 * quad) / (2.0 * math.pi * math.sqrt(det))


def _gaussian_on_grid(kernel: SampledKernel, c=None) -> np.ndarray:
    if c is None:
        raise ValueError("need a target covariance")
    x1, x2 = kernel_coords(kernel)
    return gaussian_density(c, x1[None, :], x2[:, None])


def gaussian_correlation(kernel: SampledKernel, c) -> float:
    """Normalised inner product between the kernel and a Gaussian.

    1.0 means the sampled kernel is proportional to the Gaussian with
    covariance c on the grid.
    """
    g = _gaussian_on_grid(kernel, c)
    v = kernel.values
    num = float((v * g).sum())
    den = math.sqrt(float((v * v).sum()) * float((g * g).sum()))
    return num / den


def l2_distance_to_gaussian(kernel: SampledKernel, c) -> float:
    """L2 norm of (kernel - Gaussian) by grid quadrature.

    The grid should be wide enough to hold the Gaussian tails as well
    as the kernel support; pass a generous ``extent`` when sampling.
    """
    g = _gaussian_on_grid(kernel, c)
    d = kernel.values - g
    return math.sqrt(float((d * d).sum()) * kernel.step * kernel.step)


def covariance_check(scales, iterations: int = 1) -> float:
    """Max abs difference between numeric and analytic covariance."""
    k = synthesize_kernel(scales, iterations)
    num = numeric_moments(k).covariance
    ana = covariance_general(scales) * iterations
    return float(np.abs(num - ana).max())


def stripe_image(shape=(160, 160), period: float = 8.0,
                 angle: float = 0.3, contrast: float = 1.0) -> np.ndarray:
    """Synthetic oriented sinusoidal stripe pattern in [0, contrast].

    ``angle`` is the direction the stripes run along, in radians from
    the x1 axis; the intensity gradient is perpendicular to it.
    """
    h, w = shape
    x1 = np.arange(w, dtype=np.float64)[None, :]
    x2 = np.arange(h, dtype=np.float64)[:, None]
    phase = (-math.sin(angle) * x1 + math.cos(angle) * x2)
    wave = np.sin(2.0 * math.pi * phase / period)
    return (0.5 * contrast) * (wave + 1.0)


def add_gaussian_noise(image: np.ndarray, target_psnr_db: float,
                       peak: float = 1.0, seed: int = 0) -> np.ndarray:
    """Add white Gaussian noise sized so the noisy copy sits at the
    requested PSNR relative to ``peak``."""
    sigma = peak / 10.0 ** (target_psnr_db / 20.0)
    rng = np.random.default_rng(seed)
    return image + rng.normal(0.0, sigma, size=image.shape)


def psnr(reference: np.ndarray, estimate: np.ndarray,
         peak: float = 1.0) -> float:
    """Peak signal-to-noise ratio in dB."""
    ref = np.asarray(reference, dtype=np.float64)
    est = np.asarray(estimate, dtype=np.float64)
    mse = float(np.mean((ref - est) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / mse)
