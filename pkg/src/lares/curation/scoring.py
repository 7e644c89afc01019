"""Assemble per-image complexity reports (GLCM stats + BPP + quality gates)."""

from __future__ import annotations

import io

import numpy as np
from PIL import Image

from lares.complexity import ComplexityReport, GlcmConfig, bpp, glcm, glcm_stats, quantize_gray
from lares.curation.filters import blur_score, flat_fraction


def png_encoded_bytes(image: np.ndarray) -> int:
    """Size in bytes of the image losslessly encoded as PNG."""
    buf = io.BytesIO()
    Image.fromarray(np.asarray(image, dtype=np.uint8)).save(buf, format="PNG")
    return buf.getbuffer().nbytes


def score_image(image: np.ndarray, cfg: GlcmConfig = GlcmConfig(),
                flat_grad_threshold: float = 8.0) -> ComplexityReport:
    """Full report for one decoded image (uint8, RGB or grayscale)."""
    gray = quantize_gray(image, cfg.levels)
    ent, ene, diss = glcm_stats(glcm(gray, cfg))
    h, w = gray.shape
    return ComplexityReport(
        ent=ent,
        ene=ene,
        diss=diss,
        complexity=ent - ene + diss,
        bpp=bpp(png_encoded_bytes(image), w, h),
        blur_score=blur_score(image),
        flat_fraction=flat_fraction(image, flat_grad_threshold),
    )
