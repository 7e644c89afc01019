"""Texture complexity scoring from the gray-level co-occurrence matrix.

An image scores ENT - ENE + DISS over its pooled, normalized co-occurrence
matrix: entropy (bits), energy (sum of squared cell probabilities), and
dissimilarity (expected gray-level gap). Near-flat images land close to -1
(energy dominates), textured ones climb with entropy and dissimilarity.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from lares.errors import ContractError, DimensionError, EmptyInputError

# BT.601 luma weights, full range
_LUMA = np.array([0.299, 0.587, 0.114])


@dataclass(frozen=True)
class GlcmConfig:
    """Co-occurrence construction choices. Log base is fixed at 2."""

    levels: int = 64
    offsets: tuple[tuple[int, int], ...] = ((0, 1), (1, 0))
    symmetric: bool = True

    def __post_init__(self):
        if self.levels < 2:
            raise ContractError(f"levels must be >= 2, got {self.levels}")
        if not self.offsets:
            raise ContractError("at least one offset is required")
        for off in self.offsets:
            if off == (0, 0):
                raise ContractError("offsets must be nonzero")


@dataclass(frozen=True)
class ComplexityReport:
    """Per-image texture statistics plus auxiliary quality scores."""

    ent: float
    ene: float
    diss: float
    complexity: float
    bpp: float
    blur_score: float
    flat_fraction: float

    def as_dict(self) -> dict:
        return asdict(self)


def luminance_bt601(image: np.ndarray) -> np.ndarray:
    """Full-range BT.601 luma (0.299 R + 0.587 G + 0.114 B) as float64."""
    arr = np.asarray(image)
    if arr.size == 0:
        raise EmptyInputError("empty image")
    if arr.ndim == 2:
        return arr.astype(np.float64)
    if arr.ndim == 3 and arr.shape[2] == 3:
        return arr.astype(np.float64) @ _LUMA
    raise DimensionError(f"expected (H, W) or (H, W, 3) image, got {arr.shape}")


def quantize_gray(image: np.ndarray, levels: int = 64) -> np.ndarray:
    """Quantize 8-bit luma uniformly into ``levels`` bins in [0, levels-1]."""
    y = luminance_bt601(image)
    bins = np.floor(y * (levels / 256.0)).astype(np.int64)
    return np.clip(bins, 0, levels - 1)


def glcm(gray: np.ndarray, cfg: GlcmConfig = GlcmConfig()) -> np.ndarray:
    """Pooled, normalized co-occurrence matrix of a quantized grid.

    Counts every (pixel, pixel + offset) pair inside the grid for each
    offset, mirrored when symmetric, pooled before normalization.
    """
    gray = np.asarray(gray)
    if gray.ndim != 2 or gray.size == 0:
        raise EmptyInputError(f"expected a non-empty 2D grid, got shape {gray.shape}")
    if gray.min() < 0 or gray.max() >= cfg.levels:
        raise ContractError(f"gray values must be in [0, {cfg.levels - 1}]")
    H, W = gray.shape
    L = cfg.levels
    counts = np.zeros(L * L, dtype=np.int64)
    for dy, dx in cfg.offsets:
        y0, y1 = max(0, -dy), min(H, H - dy)
        x0, x1 = max(0, -dx), min(W, W - dx)
        if y1 <= y0 or x1 <= x0:
            continue
        a = gray[y0:y1, x0:x1]
        b = gray[y0 + dy:y1 + dy, x0 + dx:x1 + dx]
        counts += np.bincount((a * L + b).ravel(), minlength=L * L)
        if cfg.symmetric:
            counts += np.bincount((b * L + a).ravel(), minlength=L * L)
    total = counts.sum()
    if total == 0:
        raise EmptyInputError("no valid pixel pairs for any offset")
    return counts.reshape(L, L) / total


def glcm_stats(P: np.ndarray) -> tuple[float, float, float]:
    """(entropy bits, energy, dissimilarity) of a normalized matrix."""
    P = np.asarray(P, dtype=np.float64)
    if abs(P.sum() - 1.0) > 1e-9:
        raise ContractError(f"matrix not normalized: sums to {P.sum()!r}")
    pos = P[P > 0]
    ent = float(-(pos * np.log2(pos)).sum())
    ene = float((P * P).sum())
    i, j = np.indices(P.shape)
    diss = float((P * np.abs(i - j)).sum())
    return ent, ene, diss


def complexity(image: np.ndarray, cfg: GlcmConfig = GlcmConfig()) -> float:
    """ENT - ENE + DISS of the pooled co-occurrence matrix."""
    ent, ene, diss = glcm_stats(glcm(quantize_gray(image, cfg.levels), cfg))
    return ent - ene + diss


def bpp(encoded_bytes: int, width: int, height: int) -> float:
    """Bits per pixel of a losslessly encoded image."""
    if width * height <= 0:
        raise ZeroDivisionError("bpp needs a positive pixel count")
    return encoded_bytes * 8.0 / (width * height)
