"""Training loop: seeded sampling, Adam, periodic validation, artifacts."""

from __future__ import annotations

import json
import logging
import time
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from lares.autodiff import Tensor, no_grad
from lares.curation.records import DatasetManifest
from lares.metrics import denoise_metric_config, psnr, sr_metric_config
from lares.model.config import ModelConfig
from lares.model.network import RestorationModel, build_model
from lares.train.data import PairSampler, load_pairs
from lares.train.optim import Adam, TrainConfig, l1_loss, l2_loss, lr_schedule

log = logging.getLogger(__name__)

CHECKPOINT_NAME = "checkpoint.bin"
MODEL_JSON = "model.json"
METRICS_NAME = "metrics.jsonl"


def _task_param(model_cfg: ModelConfig, noise_sigma: float | None):
    if model_cfg.task == "sr":
        return model_cfg.scale
    if noise_sigma is None:
        raise ValueError("denoise training needs noise_sigma")
    return noise_sigma


def validation_psnr(model: RestorationModel, pairs, task: str, scale: int) -> float:
    """Mean PSNR over full images: luma with a scale-pixel border crop for
    super-resolution, RGB with no crop for denoising."""
    cfg = sr_metric_config(scale) if task == "sr" else denoise_metric_config()
    scores = []
    with no_grad():
        for degraded, clean in pairs:
            out = model.restore(degraded)
            out = np.clip(out, 0.0, 1.0)
            scores.append(psnr(clean * 255.0, out * 255.0, cfg))
    return float(np.mean(scores))


def train(train_cfg: TrainConfig, model_cfg: ModelConfig,
          manifest: DatasetManifest, out_dir: str | Path,
          noise_sigma: float | None = None) -> dict:
    """Train on the manifest's train partition; returns a result summary.

    Writes checkpoint.bin, model.json, train.json, and metrics.jsonl (one
    row per log step: iter, loss, lr, val_psnr) under ``out_dir``. Fully
    deterministic for a fixed seed: single-threaded BLAS, seeded sampling.
    """
    train_cfg.validate()
    model_cfg.validate()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    param = _task_param(model_cfg, noise_sigma)
    loss_fn = l1_loss if train_cfg.loss == "l1" else l2_loss

    with threadpool_limits(limits=1):
        model = build_model(model_cfg, seed=train_cfg.seed)
        sampler = PairSampler(manifest, "train", model_cfg.task, param,
                              train_cfg.patch, seed=train_cfg.seed + 1)
        val_pairs = load_pairs(manifest, "val", model_cfg.task, param)
        adam = Adam(model.params, train_cfg.beta1, train_cfg.beta2, train_cfg.eps)

        rows = []
        t0 = time.perf_counter()
        log_every = max(1, min(50, train_cfg.total_iters // 20))
        for it in range(train_cfg.total_iters):
            lr = lr_schedule(it, train_cfg)
            xs, ys = sampler.batch(train_cfg.batch_size)
            out = model(Tensor(xs))
            loss = loss_fn(out, Tensor(ys))
            model.zero_grad()
            loss.backward()
            adam.step(lr)
            last = it == train_cfg.total_iters - 1
            if it % log_every == 0 or last:
                row = {"iter": it, "loss": loss.item(), "lr": lr, "val_psnr": None}
                if it % train_cfg.val_interval == 0 or last:
                    row["val_psnr"] = validation_psnr(
                        model, val_pairs, model_cfg.task, model_cfg.scale)
                    log.info("iter %d loss %.5f val_psnr %.3f",
                             it, row["loss"], row["val_psnr"])
                rows.append(row)

        elapsed = time.perf_counter() - t0
        model.save(out_dir / CHECKPOINT_NAME)

    (out_dir / MODEL_JSON).write_text(json.dumps(model_cfg.as_dict(), indent=2) + "\n")
    (out_dir / "train.json").write_text(json.dumps(train_cfg.as_dict(), indent=2) + "\n")
    with open(out_dir / METRICS_NAME, "w") as f:
        for row in rows:
            f.write(json.dumps(row) + "\n")
    return {
        "out_dir": str(out_dir),
        "checkpoint": str(out_dir / CHECKPOINT_NAME),
        "final_loss": rows[-1]["loss"],
        "final_val_psnr": rows[-1]["val_psnr"],
        "elapsed_s": elapsed,
        "param_count": model.param_count,
        "rows": rows,
    }


def load_trained(run_dir: str | Path, dtype=np.float32) -> RestorationModel:
    """Rebuild a model from a training run directory."""
    run_dir = Path(run_dir)
    cfg = ModelConfig.from_dict(json.loads((run_dir / MODEL_JSON).read_text()))
    model = build_model(cfg, seed=0, dtype=dtype)
    model.load(run_dir / CHECKPOINT_NAME)
    return model
