"""Image losses and metrics: L1 + SSIM supervision with analytic gradients.

SSIM follows the reference formulation: an 11x11 Gaussian window with
sigma 1.5, stability constants K1=0.01 and K2=0.03 on a unit dynamic
range, statistics taken only over fully-valid window positions. The
gradient with respect to the first image is exact (adjoint of the
window correlation), so the combined loss can drive the renderer
backward pass directly.
"""
from __future__ import annotations

import numpy as np
from scipy.ndimage import correlate1d

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03
_C1 = (SSIM_K1) ** 2
_C2 = (SSIM_K2) ** 2
_HALF = SSIM_WINDOW // 2

_offsets = np.arange(SSIM_WINDOW) - _HALF
_WINDOW_1D = np.exp(-0.5 * (_offsets / SSIM_SIGMA) ** 2)
_WINDOW_1D /= _WINDOW_1D.sum()


class ImageShapeError(ValueError):
    pass


def _check_pair(a: np.ndarray, b: np.ndarray) -> "tuple[np.ndarray, np.ndarray]":
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ImageShapeError(f"image shapes differ: {a.shape} vs {b.shape}")
    if a.ndim not in (2, 3):
        raise ImageShapeError("images must be HxW or HxWxC arrays")
    if a.shape[0] < SSIM_WINDOW or a.shape[1] < SSIM_WINDOW:
        raise ImageShapeError(
            f"images must be at least {SSIM_WINDOW}x{SSIM_WINDOW} for SSIM")
    return a, b


def _window_mean(img: np.ndarray) -> np.ndarray:
    """Windowed means at fully-valid positions, any number of trailing channels."""
    out = correlate1d(img, _WINDOW_1D, axis=0, mode="constant")
    out = correlate1d(out, _WINDOW_1D, axis=1, mode="constant")
    return out[_HALF:-_HALF, _HALF:-_HALF]

def _window_adjoint(maps: np.ndarray, shape: tuple) -> np.ndarray:
    """Adjoint of `_window_mean`: spread valid-position values back to pixels."""
    full = np.zeros(shape)
    full[_HALF:-_HALF, _HALF:-_HALF] = maps
    full = correlate1d(full, _WINDOW_1D, axis=0, mode="constant")
    return correlate1d(full, _WINDOW_1D, axis=1, mode="constant")


def _ssim_terms(a: np.ndarray, b: np.ndarray):
    mu_a = _window_mean(a)
    mu_b = _window_mean(b)
    var_a = _window_mean(a * a) - mu_a ** 2
    var_b = _window_mean(b * b) - mu_b ** 2
    cov = _window_mean(a * b) - mu_a * mu_b
    lum_num = 2.0 * mu_a * mu_b + _C1
    con_num = 2.0 * cov + _C2
    lum_den = mu_a ** 2 + mu_b ** 2 + _C1
    con_den = var_a + var_b + _C2
    s_map = (lum_num * con_num) / (lum_den * con_den)
    return mu_a, mu_b, lum_num, con_num, lum_den, con_den, s_map


def ssim(a: np.ndarray, b: np.ndarray) -> float:
    """Mean structural similarity between two images in [0, 1] range."""
    a, b = _check_pair(a, b)
    return float(_ssim_terms(a, b)[-1].mean())


def ssim_with_grad(a: np.ndarray, b: np.ndarray) -> "tuple[float, np.ndarray]":
    """SSIM value plus its exact gradient with respect to ``a``."""
    a, b = _check_pair(a, b)
    mu_a, mu_b, lum_num, con_num, lum_den, con_den, s_map = _ssim_terms(a, b)
    n = s_map.size
    denom = lum_den * con_den
    g_mu = (2.0 * mu_b * con_num / denom - 2.0 * mu_a * s_map / lum_den) / n
    g_var = (-s_map / con_den) / n
    g_cov = (2.0 * lum_num / denom) / n
    grad = (_window_adjoint(g_mu, a.shape)
            + 2.0 * a * _window_adjoint(g_var, a.shape)
            - 2.0 * _window_adjoint(g_var * mu_a, a.shape)
            + b * _window_adjoint(g_cov, a.shape)
            - _window_adjoint(g_cov * mu_b, a.shape))
    return float(s_map.mean()), grad


def loss(rendered: np.ndarray, target: np.ndarray,
         lambda_ssim: float = 0.2) -> "tuple[float, np.ndarray]":
    """Combined L1 + lambda * (1 - SSIM) loss and its image gradient."""
    rendered, target = _check_pair(rendered, target)
    diff = rendered - target
    l1 = float(np.abs(diff).mean())
    grad = np.sign(diff) / diff.size
    if lambda_ssim != 0.0:
        s, g_s = ssim_with_grad(rendered, target)
        return l1 + lambda_ssim * (1.0 - s), grad - lambda_ssim * g_s
    return l1, grad


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    """Peak signal-to-noise ratio in dB for unit-range images."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ImageShapeError(f"image shapes differ: {a.shape} vs {b.shape}")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return float("inf")
    return -10.0 * np.log10(mse)
