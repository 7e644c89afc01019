"""Curation pipeline: scan, gate, balance, partition, degrade, manifest."""

from __future__ import annotations

import logging
import os
import zlib
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from lares.complexity import GlcmConfig
from lares.curation.degrade import add_gaussian_noise, bicubic_resize, mod_crop, to_uint8
from lares.curation.records import DatasetManifest, ImageRecord
from lares.curation.scoring import score_image
from lares.errors import BalanceInfeasibleError, ContractError, EmptyInputError
from lares.errors import DimensionError

log = logging.getLogger(__name__)


@dataclass
class CurationConfig:
    """Knobs for one curation run; defaults follow the full-scale pipeline."""

    seed: int = 0
    min_side: int = 800
    blur_min: float | None = 100.0     # keep blur_score >= this; None disables
    flat_max: float | None = 0.6       # keep flat_fraction <= this; None disables
    select_n: int | None = None        # balanced selection size; None keeps all
    threshold: float | str = 0.0       # complexity split point, or "median"
    ratios: tuple[int, int, int] = (10, 1, 1)
    scales: tuple[int, ...] = (2,)
    noise_sigmas: tuple[int, ...] = ()
    glcm_levels: int = 64
    flat_grad_threshold: float = 8.0

    def as_dict(self) -> dict:
        d = asdict(self)
        d["ratios"] = list(self.ratios)
        d["scales"] = list(self.scales)
        d["noise_sigmas"] = list(self.noise_sigmas)
        return d


def load_image(path: str | Path) -> np.ndarray:
    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"))


def scan_dir(root: str | Path, source_tag: str = "", glcm: GlcmConfig = GlcmConfig(),
             flat_grad_threshold: float = 8.0, relative_to: str | Path | None = None,
             ) -> list[ImageRecord]:
    """Score every decodable image under ``root``, sorted by path.

    Undecodable files are logged and skipped. Record paths are stored
    relative to ``relative_to`` (default: ``root``).
    """
    root = Path(root)
    if not root.is_dir():
        raise EmptyInputError(f"not a readable directory: {root}")
    base = Path(relative_to) if relative_to is not None else root
    records = []
    skipped = 0
    for path in sorted(p for p in root.rglob("*") if p.is_file()):
        try:
            image = load_image(path)
        except (UnidentifiedImageError, OSError) as e:
            skipped += 1
            log.warning("skipping undecodable file %s (%s)", path, e)
            continue
        report = score_image(image, glcm, flat_grad_threshold)
        rel = os.path.relpath(path, base)
        records.append(ImageRecord(path=rel, width=image.shape[1], height=image.shape[0],
                                   source_tag=source_tag, report=report))
    if skipped:
        log.warning("skipped %d undecodable files under %s", skipped, root)
    return records


def gate_resolution(records: list[ImageRecord], min_side: int = 800) -> list[ImageRecord]:
    """Keep records whose short side is at least ``min_side`` (inclusive)."""
    return [r for r in records if min(r.width, r.height) >= min_side]


def gate_quality(records: list[ImageRecord], blur_min: float | None = 100.0,
                 flat_max: float | None = 0.6) -> list[ImageRecord]:
    """Drop blurry images (low Laplacian variance) and mostly-flat ones."""
    out = []
    for r in records:
        if blur_min is not None and r.report.blur_score < blur_min:
            continue
        if flat_max is not None and r.report.flat_fraction > flat_max:
            continue
        out.append(r)
    return out


def _resolve_threshold(records, threshold) -> float:
    if threshold == "median":
        return float(np.median([r.complexity for r in records]))
    return float(threshold)


def _pick(side: list[ImageRecord], count: int, rng) -> list[ImageRecord]:
    idx = rng.permutation(len(side))[:count]
    return [side[i] for i in sorted(idx)]


def balance_select(records: list[ImageRecord], n: int, threshold: float | str = 0.0,
                   seed: int = 0) -> list[ImageRecord]:
    """Seeded selection of n/2 records below the complexity threshold and n/2
    at or above it; balanced per source when several source tags are present."""
    if n % 2 != 0:
        raise ContractError(f"balanced selection needs an even n, got {n}")
    thr = _resolve_threshold(records, threshold)
    groups: dict[str, list[ImageRecord]] = {}
    for r in records:
        groups.setdefault(r.source_tag, []).append(r)
    pair_capacity = {
        tag: min(sum(r.complexity < thr for r in grp),
                 sum(r.complexity >= thr for r in grp))
        for tag, grp in groups.items()
    }
    below_total = sum(r.complexity < thr for r in records)
    above_total = len(records) - below_total
    pairs_needed = n // 2
    if sum(pair_capacity.values()) < pairs_needed:
        raise BalanceInfeasibleError(pairs_needed, below_total, above_total)

    share = _apportion(pairs_needed, {t: len(g) for t, g in groups.items()}, pair_capacity)
    rng = np.random.default_rng(seed)
    selected = []
    for tag in sorted(groups):
        grp = groups[tag]
        below = [r for r in grp if r.complexity < thr]
        above = [r for r in grp if r.complexity >= thr]
        selected += _pick(below, share[tag], rng)
        selected += _pick(above, share[tag], rng)
    return sorted(selected, key=lambda r: r.path)


def _apportion(total: int, weights: dict[str, int], caps: dict[str, int]) -> dict[str, int]:
    """Largest-remainder split of ``total`` across keys, capped, deterministic."""
    keys = sorted(weights)
    wsum = sum(weights[k] for k in keys)
    quotas = {k: total * weights[k] / wsum for k in keys}
    out = {k: min(int(quotas[k]), caps[k]) for k in keys}
    rest = total - sum(out.values())
    # hand out remaining seats by descending fractional remainder, then name
    order = sorted(keys, key=lambda k: (-(quotas[k] - int(quotas[k])), k))
    while rest > 0:
        progressed = False
        for k in order:
            if rest == 0:
                break
            if out[k] < caps[k]:
                out[k] += 1
                rest -= 1
                progressed = True
        if not progressed:
            break
    return out


def partition_sizes(n: int, ratios: tuple[int, ...]) -> list[int]:
    """Largest-remainder proportional sizes; every partition gets at least one
    record, topping up from the largest when rounding starves one."""
    if any(r <= 0 for r in ratios):
        raise ContractError(f"ratios must be positive, got {ratios}")
    if n < len(ratios):
        raise ContractError(f"cannot split {n} records into {len(ratios)} partitions")
    total = sum(ratios)
    quotas = [n * r / total for r in ratios]
    sizes = [int(q) for q in quotas]
    order = sorted(range(len(ratios)), key=lambda i: (-(quotas[i] - sizes[i]), i))
    for i in order[: n - sum(sizes)]:
        sizes[i] += 1
    while any(s == 0 for s in sizes):
        sizes[sizes.index(max(sizes))] -= 1
        sizes[sizes.index(0)] += 1
    return sizes


def partition(records: list[ImageRecord], ratios: tuple[int, int, int] = (10, 1, 1),
              seed: int = 0) -> dict[str, list[str]]:
    """Seeded shuffle, then contiguous split proportional to ``ratios``."""
    sizes = partition_sizes(len(records), ratios)
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(records))
    shuffled = [records[i].path for i in order]
    names = ("train", "val", "test")
    out = {}
    at = 0
    for name, size in zip(names, sizes):
        out[name] = shuffled[at:at + size]
        at += size
    return out


def _noise_seed(seed: int, rel_path: str, sigma: float) -> int:
    return (seed * 1000003 + zlib.crc32(f"{rel_path}|{sigma}".encode())) % (2 ** 31)


def degrade_records(records: list[ImageRecord], src_root: Path, out_dir: Path,
                    scales, noise_sigmas, seed: int) -> list[dict]:
    """Write bicubic LR images and noisy float sidecars; returns manifest rows."""
    degradations = []
    for rec in records:
        image = load_image(src_root / rec.path)
        stem = Path(rec.path).stem
        for s in scales:
            hr = mod_crop(image, s)
            lr = to_uint8(bicubic_resize(hr, 1.0 / s))
            rel = f"x{s}/{stem}.png"
            dest = out_dir / rel
            dest.parent.mkdir(parents=True, exist_ok=True)
            Image.fromarray(lr).save(dest)
            degradations.append({"kind": "bicubic", "param": s,
                                 "source": rec.path, "output": rel})
        for sigma in noise_sigmas:
            child = _noise_seed(seed, rec.path, sigma)
            noisy = add_gaussian_noise(image, float(sigma), child)
            rel = f"noise{sigma}/{stem}.npy"
            dest = out_dir / rel
            dest.parent.mkdir(parents=True, exist_ok=True)
            np.save(dest, noisy.astype(np.float32))
            preview = f"noise{sigma}/{stem}.png"
            Image.fromarray(to_uint8(noisy)).save(out_dir / preview)
            degradations.append({"kind": "gaussian_noise", "param": sigma,
                                 "source": rec.path, "output": rel,
                                 "preview": preview, "noise_seed": child})
    return degradations


def curate(src_dir: str | Path, out_dir: str | Path,
           cfg: CurationConfig = CurationConfig()) -> DatasetManifest:
    """Run the full pipeline and write ``out_dir/manifest.json``."""
    src_dir = Path(src_dir)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    glcm = GlcmConfig(levels=cfg.glcm_levels)
    records = scan_dir(src_dir, source_tag=src_dir.name, glcm=glcm,
                       flat_grad_threshold=cfg.flat_grad_threshold,
                       relative_to=out_dir)
    if not records:
        raise EmptyInputError(f"no decodable images under {src_dir}")
    records = gate_resolution(records, cfg.min_side)
    records = gate_quality(records, cfg.blur_min, cfg.flat_max)
    if not records:
        raise EmptyInputError("no records survived the quality gates")
    if cfg.select_n is not None:
        records = balance_select(records, cfg.select_n, cfg.threshold, cfg.seed)
    parts = partition(records, cfg.ratios, cfg.seed)
    degradations = degrade_records(records, out_dir, out_dir,
                                   cfg.scales, cfg.noise_sigmas, cfg.seed)
    manifest = DatasetManifest(seed=cfg.seed, selection_config=cfg.as_dict(),
                               records=records, partitions=parts,
                               degradations=degradations)
    manifest.save(out_dir)
    return manifest
