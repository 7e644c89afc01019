"""The full restoration network: shallow conv, block layers, reconstruction."""

from __future__ import annotations

import numpy as np

from lares.autodiff import Tensor, no_grad, pixel_shuffle_nhwc
from lares.autodiff.checkpoint import load_checkpoint, save_checkpoint
from lares.errors import ConfigError, DimensionError
from lares.model.blocks import Conv3x3, Glll, ParamStore
from lares.model.config import ModelConfig

_UPSAMPLE_FACTORS = {1: (), 2: (2,), 3: (3,), 4: (2, 2)}


class RestorationModel:
    """Three stages: shallow feature conv, deep feature layers with a global
    residual, and a task-specific reconstruction head. Images are (H, W, 3)
    floats in [0, 1]; batched forward takes (B, H, W, 3)."""

    def __init__(self, cfg: ModelConfig, seed: int = 0, dtype=np.float32):
        cfg.validate()
        self.cfg = cfg
        self.dtype = np.dtype(dtype)
        store = ParamStore(np.random.default_rng(seed), dtype=self.dtype)
        C = cfg.embed_channels
        self.shallow = Conv3x3(store, "shallow", 3, C)
        self.layers = []
        at = 0
        for li, n_blocks in enumerate(cfg.blocks_per_layer):
            self.layers.append(Glll(store, f"layer{li}", C, n_blocks, cfg, at))
            at += n_blocks
        self.body_conv = Conv3x3(store, "body", C, C)
        self.up_convs = [Conv3x3(store, f"up{i}", C, C * f * f)
                         for i, f in enumerate(_UPSAMPLE_FACTORS[cfg.scale])] \
            if cfg.task == "sr" else []
        self.to_rgb = Conv3x3(store, "to_rgb", C, 3)
        self.store = store

    # -- parameters ---------------------------------------------------------

    @property
    def params(self) -> dict[str, Tensor]:
        return self.store.tensors

    @property
    def param_count(self) -> int:
        return self.store.count

    def zero_grad(self) -> None:
        for t in self.params.values():
            t.grad = None

    def save(self, path) -> None:
        save_checkpoint(path, {k: t.data for k, t in self.params.items()})

    def load(self, path) -> None:
        arrays = load_checkpoint(path)
        missing = set(self.params) - set(arrays)
        extra = set(arrays) - set(self.params)
        if missing or extra:
            raise ConfigError([f"checkpoint mismatch: missing {sorted(missing)[:3]}, "
                               f"unexpected {sorted(extra)[:3]}"])
        for k, t in self.params.items():
            if arrays[k].shape != t.data.shape:
                raise ConfigError([f"parameter {k} has shape {arrays[k].shape}, "
                                   f"expected {t.data.shape}"])
            t.data = np.ascontiguousarray(arrays[k].astype(self.dtype))

    # -- forward ------------------------------------------------------------

    def forward(self, x: Tensor) -> Tensor:
        if x.ndim != 4 or x.shape[3] != 3:
            raise DimensionError(f"expected (B, H, W, 3), got {x.shape}")
        if x.shape[1] < 8 or x.shape[2] < 8:
            raise DimensionError(f"input must be at least 8x8, got {x.shape}")
        fs = self.shallow(x)
        y = fs
        for layer in self.layers:
            y = layer(y)
        fh = fs + self.body_conv(y)
        if self.cfg.task == "sr":
            y = fh
            for conv, f in zip(self.up_convs, _UPSAMPLE_FACTORS[self.cfg.scale]):
                y = pixel_shuffle_nhwc(conv(y), f)
            return self.to_rgb(y)
        return self.to_rgb(fh) + x

    def __call__(self, x: Tensor) -> Tensor:
        return self.forward(x)

    def restore(self, image: np.ndarray) -> np.ndarray:
        """Single-image inference: (H, W, 3) float in [0, 1] in and out."""
        with no_grad():
            x = Tensor(np.asarray(image, dtype=self.dtype)[None])
            return self.forward(x).data[0]

    def last_scan_orders(self) -> list[tuple[str, list[str]]]:
        """Scan orders each block's attention used on the latest forward."""
        out = []
        for li, layer in enumerate(self.layers):
            for bi, blk in enumerate(layer.blocks):
                out.append((f"layer{li}.block{bi}", list(blk.spatial.orders_used)))
        return out


def build_model(cfg: ModelConfig, seed: int = 0, dtype=np.float32) -> RestorationModel:
    """Validated, deterministically initialized model."""
    return RestorationModel(cfg, seed=seed, dtype=dtype)
