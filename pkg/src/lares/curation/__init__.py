from lares.curation.degrade import add_gaussian_noise, bicubic_resize, mod_crop, to_uint8
from lares.curation.filters import blur_score, flat_fraction
from lares.curation.pipeline import (
    CurationConfig,
    balance_select,
    curate,
    gate_quality,
    gate_resolution,
    partition,
    scan_dir,
)
from lares.curation.records import DatasetManifest, ImageRecord
from lares.curation.scoring import png_encoded_bytes, score_image
from lares.curation.synth import synth_corpus, write_corpus

__all__ = [
    "CurationConfig",
    "DatasetManifest",
    "ImageRecord",
    "add_gaussian_noise",
    "balance_select",
    "bicubic_resize",
    "blur_score",
    "curate",
    "flat_fraction",
    "gate_quality",
    "gate_resolution",
    "mod_crop",
    "partition",
    "png_encoded_bytes",
    "scan_dir",
    "score_image",
    "synth_corpus",
    "to_uint8",
    "write_corpus",
]
