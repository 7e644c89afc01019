"""Fidelity metrics: PSNR, PSNR-Y, SSIM, and Pearson correlation.

Conventions are pinned once here so numbers are comparable across runs:
super-resolution scores crop ``scale`` pixels per border and use the luma
channel; denoising scores use RGB with no crop.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from lares.errors import DimensionError, UndefinedCorrelationError


@dataclass(frozen=True)
class MetricConfig:
    max_val: float = 255.0
    border_crop: int = 0
    y_channel: bool = False

    def __post_init__(self):
        if self.max_val <= 0:
            raise DimensionError("max_val must be positive")
        if self.border_crop < 0:
            raise DimensionError("border_crop must be >= 0")


def sr_metric_config(scale: int) -> MetricConfig:
    """Community convention for super-resolution tables."""
    return MetricConfig(border_crop=scale, y_channel=True)


def denoise_metric_config() -> MetricConfig:
    """RGB, no border crop."""
    return MetricConfig()


def rgb_to_y(image: np.ndarray) -> np.ndarray:
    """Studio-swing BT.601 luma: 16 + (65.481 R + 128.553 G + 24.966 B) / 255."""
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise DimensionError(f"rgb_to_y expects (H, W, 3), got {arr.shape}")
    return 16.0 + arr @ np.array([65.481, 128.553, 24.966]) / 255.0


def _prepare(ref: np.ndarray, test: np.ndarray, cfg: MetricConfig):
    ref = np.asarray(ref, dtype=np.float64)
    test = np.asarray(test, dtype=np.float64)
    if ref.shape != test.shape:
        raise DimensionError(f"image shapes differ: {ref.shape} vs {test.shape}")
    if cfg.y_channel:
        if ref.ndim == 3:
            ref, test = rgb_to_y(ref), rgb_to_y(test)
    elif ref.ndim == 3 and ref.shape[2] == 1:
        ref, test = ref[..., 0], test[..., 0]
    c = cfg.border_crop
    if c:
        if ref.shape[0] <= 2 * c or ref.shape[1] <= 2 * c:
            raise DimensionError(f"crop {c} leaves no pixels on {ref.shape}")
        ref = ref[c:-c, c:-c]
        test = test[c:-c, c:-c]
    return ref, test


def psnr(ref: np.ndarray, test: np.ndarray, cfg: MetricConfig = MetricConfig()) -> float:
    """10 log10(max_val^2 / MSE) in dB; +inf for identical inputs."""
    ref, test = _prepare(ref, test, cfg)
    mse = float(np.mean((ref - test) ** 2))
    if mse == 0.0:
        return float("inf")
    return 10.0 * np.log10(cfg.max_val * cfg.max_val / mse)


def _gaussian_window(size: int = 11, sigma: float = 1.5) -> np.ndarray:
    half = (size - 1) / 2.0
    x = np.arange(size) - half
    g = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return g / g.sum()


def _filter_valid(img: np.ndarray, win: np.ndarray) -> np.ndarray:
    """Separable valid-mode correlation with a 1D window along both axes."""
    k = win.size
    rows = np.apply_along_axis(lambda r: np.convolve(r, win[::-1], mode="valid"), 1, img)
    return np.apply_along_axis(lambda c: np.convolve(c, win[::-1], mode="valid"), 0, rows)


def ssim(ref: np.ndarray, test: np.ndarray, cfg: MetricConfig = MetricConfig(),
         k1: float = 0.01, k2: float = 0.03, win_size: int = 11,
         sigma: float = 1.5) -> float:
    """Mean local SSIM over an 11x11 Gaussian window (sigma 1.5), valid mode."""
    ref, test = _prepare(ref, test, cfg)
    if ref.ndim == 3:
        return float(np.mean([
            ssim(ref[..., c], test[..., c], MetricConfig(max_val=cfg.max_val), k1, k2,
                 win_size, sigma)
            for c in range(ref.shape[2])
        ]))
    if ref.shape[0] < win_size or ref.shape[1] < win_size:
        raise DimensionError(f"image {ref.shape} smaller than the {win_size}x{win_size} window")
    win = _gaussian_window(win_size, sigma)
    c1 = (k1 * cfg.max_val) ** 2
    c2 = (k2 * cfg.max_val) ** 2
    mu_x = _filter_valid(ref, win)
    mu_y = _filter_valid(test, win)
    xx = _filter_valid(ref * ref, win) - mu_x * mu_x
    yy = _filter_valid(test * test, win) - mu_y * mu_y
    xy = _filter_valid(ref * test, win) - mu_x * mu_y
    num = (2 * mu_x * mu_y + c1) * (2 * xy + c2)
    den = (mu_x * mu_x + mu_y * mu_y + c1) * (xx + yy + c2)
    return float(np.mean(num / den))


def pearson(xs, ys) -> float:
    """Sample Pearson correlation coefficient."""
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.ndim != 1 or x.shape != y.shape:
        raise DimensionError(f"pearson expects equal-length 1D data, got {x.shape}, {y.shape}")
    if x.size < 2:
        raise UndefinedCorrelationError("need at least two points")
    xc = x - x.mean()
    yc = y - y.mean()
    denom = np.sqrt((xc * xc).sum() * (yc * yc).sum())
    if denom == 0.0:
        raise UndefinedCorrelationError("zero variance in at least one input")
    return float((xc * yc).sum() / denom)
