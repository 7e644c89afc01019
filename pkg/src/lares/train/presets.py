"""The unified training benchmark table and per-preset train configs."""

from __future__ import annotations

from dataclasses import dataclass

from lares.errors import ConfigError
from lares.train.optim import TrainConfig


@dataclass(frozen=True)
class BenchmarkPreset:
    """One row of the unified benchmark: a short budget probes convergence
    speed, a long budget probes restoration capability."""

    task: str
    batch_size: int
    iters_short: int
    iters_long: int

    def __post_init__(self):
        if self.iters_short >= self.iters_long:
            raise ConfigError([f"iters_short must be < iters_long, "
                               f"got {self.iters_short} >= {self.iters_long}"])


BENCHMARK_PRESETS: dict[str, BenchmarkPreset] = {
    "classic-sr": BenchmarkPreset(task="sr", batch_size=32,
                                  iters_short=100_000, iters_long=500_000),
    "light-sr": BenchmarkPreset(task="sr", batch_size=64,
                                iters_short=50_000, iters_long=500_000),
    "denoise": BenchmarkPreset(task="denoise", batch_size=16,
                               iters_short=100_000, iters_long=500_000),
}

# desk-scale iteration budgets; batch sizes stay at the benchmark values
_DESK_ITERS = {"classic-sr": 2000, "light-sr": 1500, "denoise": 1500}

TRAIN_PRESETS = tuple(BENCHMARK_PRESETS) + ("toy",)


def benchmark_table() -> list[dict]:
    """Benchmark rows in a stable order, for reporting and golden-file tests."""
    return [{"preset": name, "task": p.task, "batch_size": p.batch_size,
             "iters_short": p.iters_short, "iters_long": p.iters_long}
            for name, p in BENCHMARK_PRESETS.items()]


def train_preset(name: str, desk_scale: bool = False, long: bool = False,
                 seed: int = 0) -> TrainConfig:
    """TrainConfig for a named preset. ``desk_scale`` shrinks only the
    iteration budget; ``long`` picks the long benchmark budget."""
    if name == "toy":
        return TrainConfig(preset="toy", batch_size=8, total_iters=2000,
                           patch=32, val_interval=500, seed=seed)
    if name not in BENCHMARK_PRESETS:
        raise ConfigError([f"unknown preset {name!r}; valid: {', '.join(TRAIN_PRESETS)}"])
    p = BENCHMARK_PRESETS[name]
    iters = p.iters_long if long else p.iters_short
    if desk_scale:
        iters = _DESK_ITERS[name]
    patch = 128 if p.task == "denoise" else 64
    return TrainConfig(preset=name, batch_size=p.batch_size, total_iters=iters,
                       patch=patch, val_interval=max(1, iters // 10), seed=seed)
