"""Model configuration and named presets."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

from lares.errors import ConfigError

SHIFTS = ("none", "q_shift", "dc_shift")
WKV_VARIANTS = ("bi_h", "bi_v", "cross", "layer_cross")
FFN_VARIANTS = ("channel_mix", "mlp", "cab")
CONV_POSITIONS = ("replace", "before_sm", "between", "after_cm", "parallel")
TASKS = ("sr", "denoise")


@dataclass
class ModelConfig:
    embed_channels: int = 48
    blocks_per_layer: list[int] = field(default_factory=lambda: [6, 6, 6, 6])
    scale: int = 2
    shift: str = "dc_shift"
    q_shift_p: int = 1
    dc_shift_ks: int = 3
    wkv: str = "cross"
    ffn: str = "channel_mix"
    patch_size: int = 64
    task: str = "sr"
    cross_combine: str = "mean"
    conv_position: str = "replace"

    def violations(self) -> list[str]:
        v = []
        if self.embed_channels < 16 or self.embed_channels % 16 != 0:
            v.append(f"embed_channels must be a positive multiple of 16, got {self.embed_channels}")
        if not self.blocks_per_layer or any(b < 1 for b in self.blocks_per_layer):
            v.append(f"blocks_per_layer must be non-empty positive ints, got {self.blocks_per_layer}")
        if self.scale not in (1, 2, 3, 4):
            v.append(f"scale must be one of 1/2/3/4, got {self.scale}")
        if self.shift not in SHIFTS:
            v.append(f"shift must be one of {SHIFTS}, got {self.shift!r}")
        if self.q_shift_p < 0:
            v.append(f"q_shift_p must be >= 0, got {self.q_shift_p}")
        if self.dc_shift_ks < 1 or self.dc_shift_ks % 2 == 0:
            v.append(f"dc_shift_ks must be odd and positive, got {self.dc_shift_ks}")
        if self.wkv not in WKV_VARIANTS:
            v.append(f"wkv must be one of {WKV_VARIANTS}, got {self.wkv!r}")
        if self.ffn not in FFN_VARIANTS:
            v.append(f"ffn must be one of {FFN_VARIANTS}, got {self.ffn!r}")
        if self.patch_size < 8:
            v.append(f"patch_size must be >= 8, got {self.patch_size}")
        if self.task not in TASKS:
            v.append(f"task must be one of {TASKS}, got {self.task!r}")
        if self.cross_combine not in ("mean", "sum"):
            v.append(f"cross_combine must be mean or sum, got {self.cross_combine!r}")
        if self.conv_position not in CONV_POSITIONS:
            v.append(f"conv_position must be one of {CONV_POSITIONS}, got {self.conv_position!r}")
        return v

    def validate(self) -> "ModelConfig":
        v = self.violations()
        if v:
            raise ConfigError(v)
        return self

    def as_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        return cls(**d)


def model_preset(name: str, scale: int = 2) -> ModelConfig:
    """Named architecture presets; ``scale`` applies to the SR presets."""
    if name == "classic-sr":
        return ModelConfig(embed_channels=192, blocks_per_layer=[6] * 6, scale=scale,
                           wkv="cross", patch_size=64, task="sr")
    if name == "light-sr":
        return ModelConfig(embed_channels=48, blocks_per_layer=[6] * 4, scale=scale,
                           wkv="layer_cross", patch_size=64, task="sr")
    if name == "denoise":
        return ModelConfig(embed_channels=192, blocks_per_layer=[6] * 6, scale=1,
                           wkv="cross", patch_size=128, task="denoise")
    if name == "toy":
        return ModelConfig(embed_channels=16, blocks_per_layer=[2, 2], scale=scale,
                           wkv="cross", dc_shift_ks=3, patch_size=32, task="sr")
    raise ConfigError([f"unknown model preset {name!r}; "
                       f"valid: classic-sr, light-sr, denoise, toy"])
