"""Paired patch sampling from a curation manifest, with dihedral augmentation."""

from __future__ import annotations

import numpy as np

from lares.curation.degrade import mod_crop
from lares.curation.pipeline import load_image
from lares.curation.records import DatasetManifest
from lares.errors import ContractError, ManifestError


def load_pairs(manifest: DatasetManifest, partition: str, task: str,
               param) -> list[tuple[np.ndarray, np.ndarray]]:
    """Preloaded (input, target) float32 pairs on the [0, 1] scale.

    sr: input is the bicubic LR image, target the mod-cropped original.
    denoise: input is the float noise sidecar, target the original.
    """
    kind = "bicubic" if task == "sr" else "gaussian_noise"
    pairs = []
    for clean_path, deg_path in manifest.pairs(partition, kind, param):
        clean = load_image(clean_path).astype(np.float32) / 255.0
        if task == "sr":
            clean = mod_crop(clean, int(param))
            degraded = load_image(deg_path).astype(np.float32) / 255.0
        else:
            degraded = (np.load(deg_path).astype(np.float32) / 255.0)
        pairs.append((degraded, clean))
    if not pairs:
        raise ManifestError(f"no {kind}({param}) pairs in partition {partition!r}")
    return pairs


def _augment(x: np.ndarray, y: np.ndarray, rot: int, flip: bool):
    if rot:
        x = np.rot90(x, rot, axes=(0, 1))
        y = np.rot90(y, rot, axes=(0, 1))
    if flip:
        x = x[:, ::-1]
        y = y[:, ::-1]
    return x, y


class PairSampler:
    """Seeded random square crops; the target crop is exactly the
    geometrically corresponding region under the same rotation/flip."""

    def __init__(self, manifest: DatasetManifest, partition: str, task: str,
                 param, patch: int, seed: int):
        self.task = task
        self.scale = int(param) if task == "sr" else 1
        self.patch = patch
        self.pairs = load_pairs(manifest, partition, task, param)
        for i, (x, _) in enumerate(self.pairs):
            if x.shape[0] < patch or x.shape[1] < patch:
                raise ContractError(
                    f"pair {i} input {x.shape[:2]} smaller than patch {patch}")
        self.rng = np.random.default_rng(seed)

    def batch(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        s, p = self.scale, self.patch
        xs = np.empty((n, p, p, 3), dtype=np.float32)
        ys = np.empty((n, p * s, p * s, 3), dtype=np.float32)
        for i in range(n):
            x, y = self.pairs[int(self.rng.integers(len(self.pairs)))]
            y0 = int(self.rng.integers(x.shape[0] - p + 1))
            x0 = int(self.rng.integers(x.shape[1] - p + 1))
            xc = x[y0:y0 + p, x0:x0 + p]
            yc = y[s * y0:s * (y0 + p), s * x0:s * (x0 + p)]
            rot = int(self.rng.integers(4))
            flip = bool(self.rng.integers(2))
            xc, yc = _augment(xc, yc, rot, flip)
            xs[i] = xc
            ys[i] = yc
        return xs, ys
