"""Reference implementations: sampled kernels, moments, image helpers."""

import math

import numpy as np
import pytest

from rubs.geometry import covariance_general, covariance_of
from rubs.oracle import (
    add_gaussian_noise,
    closed_form_l_matrix,
    dense_convolve,
    gaussian_correlation,
    kernel_coords,
    l2_distance_to_gaussian,
    moment_closed_forms,
    numeric_moments,
    psnr,
    sample_kernel_exact,
    stripe_image,
    synthesize_kernel,
    uniform_scales,
)
from rubs.solver import kurtosis_matrix


def test_uniform_scales_covariance():
    # sigma * sqrt(24 / n) widths give an isotropic sigma^2 I
    # covariance for any direction count.
    for n in (2, 3, 4, 6, 8):
        a = uniform_scales(n, 1.7)
        c = covariance_general(a)
        assert np.allclose(c, 1.7**2 * np.eye(2), atol=1e-12)


def test_exact_sampler_mass_and_symmetry(rng):
    a = np.array([1.4, 0.9, 2.1, 1.3])
    # Support half-widths per axis.
    hx = 0.5 * (a[0] + (a[1] + a[3]) / math.sqrt(2)) + 0.5
    hy = 0.5 * (a[2] + (a[1] + a[3]) / math.sqrt(2)) + 0.5
    step = 0.01
    x = np.arange(-hx, hx + step, step)
    y = np.arange(-hy, hy + step, step)
    vals = sample_kernel_exact(a, x[None, :], y[:, None])
    assert vals.min() >= 0.0
    assert float(vals.sum()) * step * step == pytest.approx(1.0, abs=1e-4)
    # Central symmetry of the kernel.
    pts = rng.uniform(-1.5, 1.5, size=(50, 2))
    v1 = sample_kernel_exact(a, pts[:, 0], pts[:, 1])
    v2 = sample_kernel_exact(a, -pts[:, 0], -pts[:, 1])
    assert np.abs(v1 - v2).max() < 1e-14


def test_exact_sampler_outside_support():
    a = np.array([1.0, 1.0, 1.0, 1.0])
    far = sample_kernel_exact(a, np.array([5.0, -4.0, 0.0]),
                              np.array([0.0, 3.0, 5.0]))
    assert np.all(far == 0.0)


def test_synthesize_two_direction_box_exact():
    # Two directions, one pass: an axis-aligned box, sampled in closed
    # form with half-weight edges.
    a = np.array([2.0, 3.0])
    k = synthesize_kernel(a, 1, step=0.5)
    assert k.mass == pytest.approx(1.0, rel=1e-12)
    x1, x2 = kernel_coords(k)
    inside_x = np.abs(x1) < 1.0 - 1e-12
    inside_y = np.abs(x2) < 1.5 - 1e-12
    inner = k.values[np.ix_(inside_y, inside_x)]
    assert np.allclose(inner, 1.0 / 6.0, atol=1e-14)


def test_synthesize_matches_exact_sampler():
    # Spectral route vs direct geometric evaluation.  The default
    # fold radius leaves an alternating alias ripple of order 1e-7.
    a = np.array([1.3, 1.8, 0.9, 1.1])
    k = synthesize_kernel(a, 1)
    x1, x2 = kernel_coords(k)
    direct = sample_kernel_exact(a, x1[None, :], x2[:, None])
    assert np.abs(k.values - direct).max() < 5e-7
    # Folding more replicas must shrink the residual.
    k3 = synthesize_kernel(a, 1, fold_radius=3)
    r3 = np.abs(k3.values - direct).max()
    assert r3 < np.abs(k.values - direct).max()


def test_synthesize_covariance_single_and_iterated():
    a = np.array([1.2, 2.0, 1.6, 0.8])
    for m in (1, 2, 3):
        k = synthesize_kernel(a, m)
        mom = numeric_moments(k)
        assert mom.mass == pytest.approx(1.0, abs=1e-7)
        target = covariance_general(a) * m
        assert np.abs(mom.covariance - target).max() < 1e-6


def test_moment_closed_forms_match_quadrature():
    for a in ([1.0, 1.5, 2.0, 1.2], [0.7, 0.9, 1.1, 1.3],
              [2.2, 1.1, 0.8, 1.9]):
        a = np.array(a)
        k = synthesize_kernel(a, 1, step=0.02)
        mom = numeric_moments(k)
        closed = moment_closed_forms(a)
        assert np.abs(np.asarray(mom.fourth) - np.asarray(closed)).max() < 1e-5


def test_l_matrix_consistent_with_kurtosis_matrix(rng):
    # Independent derivations: L assembled from the fourth-moment
    # closed forms vs the direct width-sum form of the kurtosis
    # matrix, tied together through K = L - tr(C) C - 2 C^2.
    for _ in range(20):
        a = rng.uniform(0.5, 2.5, size=4)
        l_mat = closed_form_l_matrix(a)
        c = covariance_of(a)
        k_from_l = l_mat - np.trace(c) * c - 2.0 * (c @ c)
        k_direct = kurtosis_matrix(a)
        scale = max(np.abs(k_direct).max(), 1e-30)
        assert np.abs(k_from_l - k_direct).max() < 1e-10 * scale


def test_dense_convolve_constant_interior():
    # Integer straight widths keep the discrete sum at exactly one, so
    # a constant image passes through untouched away from the borders.
    a = np.array([2.0, 1.3, 3.0, 2.6])
    f = np.ones((24, 24))
    out = dense_convolve(f, a)
    assert out.shape == f.shape
    m = 6
    assert np.abs(out[m:-m, m:-m] - 1.0).max() < 1e-10


def test_dense_convolve_linearity(rng):
    a = np.array([1.5, 1.0, 2.0, 1.2])
    f = rng.standard_normal((12, 14))
    g = rng.standard_normal((12, 14))
    lhs = dense_convolve(2.0 * f - 3.0 * g, a)
    rhs = 2.0 * dense_convolve(f, a) - 3.0 * dense_convolve(g, a)
    assert np.abs(lhs - rhs).max() < 1e-10


def test_gaussian_helpers_selfcheck():
    c = np.array([[2.0, 0.6], [0.6, 1.0]])
    step = 0.05
    half = 6.0
    n = int(round(2 * half / step)) + 1
    x = (np.arange(n) - n // 2) * step
    from rubs.oracle import SampledKernel

    vals = np.exp(-0.5 * np.einsum(
        "ij,jkl,ikl->kl",
        np.linalg.inv(c),
        np.stack(np.meshgrid(x, x, indexing="xy")),
        np.stack(np.meshgrid(x, x, indexing="xy")),
    )) / (2 * math.pi * math.sqrt(np.linalg.det(c)))
    k = SampledKernel(vals, step)
    assert gaussian_correlation(k, c) == pytest.approx(1.0, abs=1e-9)
    assert l2_distance_to_gaussian(k, c) < 1e-9


def test_stripe_image_range_and_orientation():
    img = stripe_image((64, 64), period=8.0, angle=0.0, contrast=2.0)
    assert img.min() >= 0.0 and img.max() <= 2.0
    # angle 0: stripes run along x1, so rows are constant.
    assert np.abs(np.diff(img, axis=1)).max() < 1e-12
    assert np.abs(np.diff(img, axis=0)).max() > 0.1


def test_psnr_basics():
    ref = np.zeros((10, 10))
    assert psnr(ref, ref) == math.inf
    est = ref + 0.1
    assert psnr(ref, est, peak=1.0) == pytest.approx(20.0, abs=1e-12)


def test_add_gaussian_noise_hits_target():
    img = stripe_image((200, 200))
    noisy = add_gaussian_noise(img, 18.0, peak=1.0, seed=3)
    assert psnr(img, noisy, peak=1.0) == pytest.approx(18.0, abs=0.2)
