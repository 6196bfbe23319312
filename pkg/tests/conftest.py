"""Shared helpers for the test suite."""

import numpy as np
import pytest

from rubs.geometry import covariance_from_params, elongation_bound


def make_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)


def random_scale_vectors(rng, count: int, lo: float = 0.6, hi: float = 2.8):
    """Batch of random positive scale-vectors, shape (count, 4)."""
    return rng.uniform(lo, hi, size=(count, 4))


def random_feasible_covariance(rng, s_lo: float = 0.5, s_hi: float = 8.0):
    """A random covariance target that the four-direction family can hit."""
    theta = rng.uniform(0.0, np.pi)
    cap = min(elongation_bound(theta) * 0.9, 5.5)
    rho = rng.uniform(1.0, cap)
    size = rng.uniform(s_lo, s_hi)
    return covariance_from_params(size, rho, theta)


def smooth_random_field(rng, shape, lo: float, hi: float) -> np.ndarray:
    """Low-frequency random surface mapped into [lo, hi]."""
    h, w = shape
    coarse = rng.standard_normal((max(h // 8, 2), max(w // 8, 2)))
    ys = np.linspace(0.0, coarse.shape[0] - 1.0, h)
    xs = np.linspace(0.0, coarse.shape[1] - 1.0, w)
    yi = np.minimum(ys.astype(int), coarse.shape[0] - 2)
    xi = np.minimum(xs.astype(int), coarse.shape[1] - 2)
    fy = (ys - yi)[:, None]
    fx = (xs - xi)[None, :]
    c00 = coarse[yi][:, xi]
    c01 = coarse[yi][:, xi + 1]
    c10 = coarse[yi + 1][:, xi]
    c11 = coarse[yi + 1][:, xi + 1]
    surf = (c00 * (1 - fy) * (1 - fx) + c01 * (1 - fy) * fx
            + c10 * fy * (1 - fx) + c11 * fy * fx)
    span = surf.max() - surf.min()
    if span == 0.0:
        return np.full(shape, 0.5 * (lo + hi))
    return lo + (surf - surf.min()) * (hi - lo) / span


def impulse(shape, at=None) -> np.ndarray:
    h, w = shape
    if at is None:
        at = (h // 2, w // 2)
    f = np.zeros(shape)
    f[at] = 1.0
    return f


@pytest.fixture
def rng():
    return make_rng(20240817)
