"""Deterministic synthetic texture corpus spanning a wide complexity range.

Even indices draw from near-flat families (gentle ramps, smooth blobs) that
score below zero on the texture-complexity metric; odd indices draw from
textured families (gratings, checkerboards, value noise, mixtures) that
score above it. That alternation keeps any prefix balanced for threshold-0
selection.
"""

from __future__ import annotations

import numpy as np

from lares.errors import ContractError

_SIZES = (96, 112, 128, 144, 160)


def _coords(rng, h, w):
    yy, xx = np.mgrid[0:h, 0:w]
    return yy / max(h - 1, 1), xx / max(w - 1, 1)


def _flat_field(rng, h, w) -> np.ndarray:
    # constant background plus a few small hard-edged shapes: the off-bin
    # mass stays under a few percent (keeping the complexity score below
    # zero) while the sharp edges still alias under bicubic resampling
    base = rng.uniform(40.0, 200.0)
    field = np.full((h, w), base)
    yy, xx = np.mgrid[0:h, 0:w]
    for _ in range(int(rng.integers(1, 4))):
        contrast = rng.uniform(25.0, 85.0) * rng.choice([-1.0, 1.0])
        if base + contrast < 2.0 or base + contrast > 253.0:
            contrast = -contrast
        kind = rng.integers(0, 3)
        if kind == 0:  # filled disk
            cy = rng.uniform(0.15, 0.85) * h
            cx = rng.uniform(0.15, 0.85) * w
            r = rng.uniform(2.5, 6.5)
            mask = (yy - cy) ** 2 + (xx - cx) ** 2 <= r * r
        elif kind == 1:  # filled rectangle
            rh, rw = rng.integers(3, 13), rng.integers(3, 13)
            y0 = int(rng.uniform(0.1, 0.8) * (h - rh))
            x0 = int(rng.uniform(0.1, 0.8) * (w - rw))
            mask = np.zeros((h, w), dtype=bool)
            mask[y0:y0 + rh, x0:x0 + rw] = True
        else:  # thin axis-aligned segment
            thick = int(rng.integers(1, 3))
            mask = np.zeros((h, w), dtype=bool)
            if rng.random() < 0.5:
                length = int(rng.uniform(0.2, 0.6) * w)
                y0 = int(rng.uniform(0.1, 0.8) * (h - thick))
                x0 = int(rng.uniform(0.1, 0.8) * (w - length))
                mask[y0:y0 + thick, x0:x0 + length] = True
            else:
                length = int(rng.uniform(0.2, 0.6) * h)
                y0 = int(rng.uniform(0.1, 0.8) * (h - length))
                x0 = int(rng.uniform(0.1, 0.8) * (w - thick))
                mask[y0:y0 + length, x0:x0 + thick] = True
        field[mask] = base + contrast
    return field


def _textured_field(rng, h, w) -> np.ndarray:
    # family parameters are tuned so the co-occurrence score tracks how much
    # detail a bicubic round trip actually loses (gratings easiest, grainy
    # noise and fine checkerboards hardest)
    yy, xx = _coords(rng, h, w)
    kind = rng.integers(0, 4)
    if kind == 0:  # sinusoidal grating
        freq = rng.uniform(5.0, 11.0)
        theta = rng.uniform(0, 2 * np.pi)
        phase = rng.uniform(0, 2 * np.pi)
        amp = rng.uniform(30.0, 55.0)
        field = 128.0 + amp * np.sin(2 * np.pi * freq * (np.cos(theta) * xx + np.sin(theta) * yy) + phase)
    elif kind == 1:  # high-contrast fine checkerboard
        cell = int(rng.integers(2, 6))
        lo = rng.uniform(10.0, 60.0)
        hi = lo + rng.uniform(110.0, 190.0)
        grid = ((np.arange(h)[:, None] // cell + np.arange(w)[None, :] // cell) % 2)
        field = np.where(grid == 0, lo, hi).astype(np.float64)
    elif kind == 2:  # smooth value noise plus per-pixel grain
        field = (_value_noise(rng, h, w, amp=rng.uniform(90.0, 160.0))
                 + rng.uniform(-1.0, 1.0, (h, w)) * rng.uniform(18.0, 40.0))
    else:  # grating + grainy value noise
        freq = rng.uniform(2.0, 6.0)
        theta = rng.uniform(0, 2 * np.pi)
        amp = rng.uniform(30.0, 55.0)
        field = (128.0 + amp * np.sin(2 * np.pi * freq * (np.cos(theta) * xx + np.sin(theta) * yy))
                 + _value_noise(rng, h, w, amp=rng.uniform(40.0, 80.0)) - 64.0
                 + rng.uniform(-1.0, 1.0, (h, w)) * rng.uniform(8.0, 20.0))
    return field


def _value_noise(rng, h, w, amp: float) -> np.ndarray:
    gh, gw = int(rng.integers(6, 17)), int(rng.integers(6, 17))
    coarse = rng.uniform(0.0, 1.0, (gh, gw))
    ys = np.linspace(0, gh - 1, h)
    xs = np.linspace(0, gw - 1, w)
    y0 = np.clip(ys.astype(int), 0, gh - 2)
    x0 = np.clip(xs.astype(int), 0, gw - 2)
    fy = (ys - y0)[:, None]
    fx = (xs - x0)[None, :]
    c00 = coarse[y0][:, x0]
    c01 = coarse[y0][:, x0 + 1]
    c10 = coarse[y0 + 1][:, x0]
    c11 = coarse[y0 + 1][:, x0 + 1]
    smooth = (c00 * (1 - fy) * (1 - fx) + c01 * (1 - fy) * fx
              + c10 * fy * (1 - fx) + c11 * fy * fx)
    return 40.0 + amp * smooth


def synth_corpus(seed: int, n: int) -> list[np.ndarray]:
    """Generate ``n`` deterministic RGB uint8 images for the given seed."""
    if n < 1:
        raise ContractError(f"corpus size must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    images = []
    for i in range(n):
        h = int(rng.choice(_SIZES))
        w = int(rng.choice(_SIZES))
        field = _flat_field(rng, h, w) if i % 2 == 0 else _textured_field(rng, h, w)
        gains = rng.uniform(0.8, 1.0, 3)
        rgb = np.clip(np.round(field[:, :, None] * gains[None, None, :]), 0, 255)
        images.append(rgb.astype(np.uint8))
    return images


def write_corpus(seed: int, n: int, out_dir) -> list[str]:
    """Write a corpus as PNGs named by index; returns the file paths."""
    from pathlib import Path

    from PIL import Image

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, img in enumerate(synth_corpus(seed, n)):
        p = out / f"synth_{i:04d}.png"
        Image.fromarray(img).save(p)
        paths.append(str(p))
    return paths
