"""Image quality gates: blur detection and flat-region detection."""

from __future__ import annotations

import numpy as np

from lares.complexity import luminance_bt601
from lares.errors import DimensionError


def _interior_laplacian(y: np.ndarray) -> np.ndarray:
    # 3x3 Laplacian (centre -4, cross 1), interior pixels only
    return (y[:-2, 1:-1] + y[2:, 1:-1] + y[1:-1, :-2] + y[1:-1, 2:]
            - 4.0 * y[1:-1, 1:-1])


def blur_score(image: np.ndarray) -> float:
    """Population variance of the interior 3x3 Laplacian response.

    Sharp detail produces large second derivatives; heavy blur pushes the
    score toward zero. Linear ramps score exactly zero.
    """
    y = luminance_bt601(image)
    if y.shape[0] < 3 or y.shape[1] < 3:
        raise DimensionError(f"blur_score needs at least 3x3 pixels, got {y.shape}")
    lap = _interior_laplacian(y)
    return float(lap.var())


def flat_fraction(image: np.ndarray, grad_threshold: float = 8.0) -> float:
    """Fraction of interior pixels whose Sobel gradient magnitude is below
    ``grad_threshold``. 1.0 means fully flat."""
    y = luminance_bt601(image)
    if y.shape[0] < 3 or y.shape[1] < 3:
        raise DimensionError(f"flat_fraction needs at least 3x3 pixels, got {y.shape}")
    # Sobel pair on the interior
    gx = ((y[:-2, 2:] + 2.0 * y[1:-1, 2:] + y[2:, 2:])
          - (y[:-2, :-2] + 2.0 * y[1:-1, :-2] + y[2:, :-2]))
    gy = ((y[2:, :-2] + 2.0 * y[2:, 1:-1] + y[2:, 2:])
          - (y[:-2, :-2] + 2.0 * y[:-2, 1:-1] + y[:-2, 2:]))
    mag = np.sqrt(gx * gx + gy * gy)
    return float(np.mean(mag < grad_threshold))
