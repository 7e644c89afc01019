"""Degradation synthesis: anti-aliased bicubic resampling and Gaussian noise."""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from lares.errors import DimensionError


def _cubic(x: np.ndarray) -> np.ndarray:
    """Keys bicubic kernel with a = -0.5, support 4."""
    ax = np.abs(x)
    ax2 = ax * ax
    ax3 = ax2 * ax
    inner = 1.5 * ax3 - 2.5 * ax2 + 1.0
    outer = -0.5 * ax3 + 2.5 * ax2 - 4.0 * ax + 2.0
    return np.where(ax <= 1.0, inner, np.where(ax <= 2.0, outer, 0.0))


def _contributions(in_len: int, out_len: int, scale: float):
    """Per-output-sample source indices and normalized weights.

    Downscaling widens the kernel by 1/scale (anti-aliasing); out-of-range
    taps are clamped to the border, i.e. edges replicate.
    """
    x = (np.arange(out_len, dtype=np.float64) + 0.5) / scale - 0.5
    if scale < 1.0:
        width = 4.0 / scale
        kernel = lambda t: scale * _cubic(scale * t)
    else:
        width = 4.0
        kernel = _cubic
    left = np.floor(x - width / 2.0).astype(np.int64) + 1
    taps = int(np.ceil(width)) + 2
    idx = left[:, None] + np.arange(taps)[None, :]
    weights = kernel(x[:, None] - idx)
    weights /= weights.sum(axis=1, keepdims=True)
    return np.clip(idx, 0, in_len - 1), weights


def _resize_axis(img: np.ndarray, out_len: int, scale: float, axis: int) -> np.ndarray:
    idx, w = _contributions(img.shape[axis], out_len, scale)
    moved = np.moveaxis(img, axis, 0)
    out = np.einsum("ot,ot...->o...", w, moved[idx])
    return np.moveaxis(out, 0, axis)


def bicubic_resize(image: np.ndarray, scale) -> np.ndarray:
    """Separable bicubic resample by ``scale`` (Fraction, float, or int).

    Output size is ceil(side * scale) per axis; heights first, then widths.
    Returns float64 on the input value scale, unclipped.
    """
    if isinstance(scale, Fraction):
        scale = float(scale)
    scale = float(scale)
    if scale <= 0:
        raise DimensionError(f"scale must be positive, got {scale}")
    img = np.asarray(image, dtype=np.float64)
    if img.ndim not in (2, 3) or img.size == 0:
        raise DimensionError(f"expected a non-empty 2D/3D image, got shape {img.shape}")
    out_h = int(np.ceil(img.shape[0] * scale))
    out_w = int(np.ceil(img.shape[1] * scale))
    if out_h < 1 or out_w < 1:
        raise DimensionError(f"scale {scale} collapses {img.shape[:2]} below one pixel")
    img = _resize_axis(img, out_h, scale, axis=0)
    img = _resize_axis(img, out_w, scale, axis=1)
    return img


def to_uint8(image: np.ndarray) -> np.ndarray:
    return np.clip(np.round(image), 0, 255).astype(np.uint8)


def mod_crop(image: np.ndarray, factor: int) -> np.ndarray:
    """Crop bottom/right so both sides are multiples of ``factor``."""
    h = image.shape[0] - image.shape[0] % factor
    w = image.shape[1] - image.shape[1] % factor
    if h < 1 or w < 1:
        raise DimensionError(f"image {image.shape[:2]} too small for factor {factor}")
    return image[:h, :w]


def add_gaussian_noise(image: np.ndarray, sigma: float, seed: int) -> np.ndarray:
    """i.i.d. N(0, sigma^2) on the 0-255 scale, unclipped float64."""
    if sigma < 0:
        raise DimensionError(f"sigma must be >= 0, got {sigma}")
    img = np.asarray(image, dtype=np.float64)
    rng = np.random.default_rng(seed)
    return img + rng.normal(0.0, sigma, size=img.shape)
