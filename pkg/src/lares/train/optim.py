"""Losses, Adam, and the multi-step learning-rate schedule."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from lares.autodiff import Tensor
from lares.errors import ConfigError, DimensionError, NumericError


@dataclass
class TrainConfig:
    preset: str = "toy"
    batch_size: int = 8
    total_iters: int = 2000
    lr0: float = 2e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    patch: int = 32                 # degraded-input patch side
    seed: int = 0
    loss: str = "l1"                # l1 | l2
    milestones: tuple[float, ...] = (0.5, 0.75, 0.9)
    val_interval: int = 500

    def violations(self) -> list[str]:
        v = []
        if self.batch_size < 1:
            v.append(f"batch_size must be >= 1, got {self.batch_size}")
        if self.total_iters < 1:
            v.append(f"total_iters must be >= 1, got {self.total_iters}")
        ms = list(self.milestones)
        if ms != sorted(ms) or len(set(ms)) != len(ms) or any(not 0 < m < 1 for m in ms):
            v.append(f"milestones must be strictly increasing in (0, 1), got {ms}")
        if self.loss not in ("l1", "l2"):
            v.append(f"loss must be l1 or l2, got {self.loss!r}")
        if self.patch < 8:
            v.append(f"patch must be >= 8, got {self.patch}")
        return v

    def validate(self) -> "TrainConfig":
        v = self.violations()
        if v:
            raise ConfigError(v)
        return self

    def as_dict(self) -> dict:
        d = asdict(self)
        d["milestones"] = list(self.milestones)
        return d


def l1_loss(pred: Tensor, target: Tensor) -> Tensor:
    """Mean absolute error."""
    if pred.shape != target.shape:
        raise DimensionError(f"loss shapes differ: {pred.shape} vs {target.shape}")
    return (pred - target).abs().mean()


def l2_loss(pred: Tensor, target: Tensor) -> Tensor:
    """Mean squared error."""
    if pred.shape != target.shape:
        raise DimensionError(f"loss shapes differ: {pred.shape} vs {target.shape}")
    return ((pred - target) ** 2).mean()


def lr_schedule(iteration: int, cfg: TrainConfig) -> float:
    """Initial rate halved at each milestone fraction of total_iters."""
    passed = sum(iteration >= m * cfg.total_iters for m in cfg.milestones)
    return cfg.lr0 * (0.5 ** passed)


class Adam:
    """Standard Adam with bias-corrected moments over a named parameter dict."""

    def __init__(self, params: dict[str, Tensor], beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.t = 0
        self.m = {k: np.zeros_like(p.data) for k, p in params.items()}
        self.v = {k: np.zeros_like(p.data) for k, p in params.items()}

    def step(self, lr: float) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        c1 = 1.0 - b1 ** self.t
        c2 = 1.0 - b2 ** self.t
        for name, p in self.params.items():
            g = p.grad
            if g is None:
                continue
            if not np.isfinite(g).all():
                bad = int(np.size(g) - np.isfinite(g).sum())
                raise NumericError(
                    f"non-finite gradient for {name!r} at step {self.t} "
                    f"({bad} of {g.size} entries); aborting")
            m = self.m[name]
            v = self.v[name]
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * (g * g)
            p.data = p.data - lr * (m / c1) / (np.sqrt(v / c2) + self.eps)
