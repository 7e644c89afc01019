"""Network building blocks operating on (B, H, W, C) feature maps."""

from __future__ import annotations

import numpy as np

from lares.autodiff import Tensor, concat, conv2d_nhwc, depthwise_conv2d_nhwc, layer_norm, pad2d
from lares.errors import DimensionError
from lares.wkv import ScanOrder, WkvParams, biwkv_2d, cross_biwkv, flatten_scan, unflatten_scan


class ParamStore:
    """Flat registry of trainable tensors, keyed by dotted module path."""

    def __init__(self, rng: np.random.Generator, dtype=np.float32):
        self.rng = rng
        self.dtype = dtype
        self.tensors: dict[str, Tensor] = {}

    def _add(self, name: str, arr: np.ndarray) -> Tensor:
        if name in self.tensors:
            raise KeyError(f"duplicate parameter name {name}")
        t = Tensor(arr.astype(self.dtype), requires_grad=True)
        self.tensors[name] = t
        return t

    def trunc_normal(self, name: str, shape, std: float = 0.02) -> Tensor:
        arr = np.clip(self.rng.normal(0.0, std, shape), -2 * std, 2 * std)
        return self._add(name, arr)

    def zeros(self, name: str, shape) -> Tensor:
        return self._add(name, np.zeros(shape))

    def ones(self, name: str, shape) -> Tensor:
        return self._add(name, np.ones(shape))

    def full(self, name: str, shape, value: float) -> Tensor:
        return self._add(name, np.full(shape, value))

    def wkv(self, name: str, channels: int) -> WkvParams:
        init = WkvParams.init(channels, dtype=self.dtype)
        return WkvParams(self._add(f"{name}.w", init.w.data),
                         self._add(f"{name}.u", init.u.data))

    @property
    def count(self) -> int:
        return sum(t.size for t in self.tensors.values())


class Linear:
    """Pointwise projection over the trailing channel axis (a 1x1 conv)."""

    def __init__(self, store: ParamStore, name: str, c_in: int, c_out: int, bias: bool = False):
        self.c_in, self.c_out = c_in, c_out
        self.weight = store.trunc_normal(f"{name}.weight", (c_in, c_out))
        self.bias = store.zeros(f"{name}.bias", (c_out,)) if bias else None

    def __call__(self, x: Tensor) -> Tensor:
        lead = x.shape[:-1]
        y = x.reshape(-1, self.c_in) @ self.weight
        if self.bias is not None:
            y = y + self.bias
        return y.reshape(*lead, self.c_out)


class Conv3x3:
    """3x3 same-size convolution on (B, H, W, C) maps."""

    def __init__(self, store: ParamStore, name: str, c_in: int, c_out: int):
        self.weight = store.trunc_normal(f"{name}.weight", (c_out, c_in, 3, 3))
        self.bias = store.zeros(f"{name}.bias", (c_out,))

    def __call__(self, x: Tensor) -> Tensor:
        return conv2d_nhwc(x, self.weight, self.bias, padding=1)


class LayerNorm:
    def __init__(self, store: ParamStore, name: str, channels: int, eps: float = 1e-5):
        self.gamma = store.ones(f"{name}.gamma", (channels,))
        self.beta = store.zeros(f"{name}.beta", (channels,))
        self.eps = eps

    def __call__(self, x: Tensor) -> Tensor:
        return layer_norm(x, self.gamma, self.beta, self.eps)


def q_shift(x: Tensor, mu: Tensor, p: int) -> Tensor:
    """Quarter-channel neighbour mix: X + (1 + mu) X', where X' stacks the
    four axis neighbours at distance p, one quarter of the channels each.
    p = 0 disables the shift entirely."""
    if p == 0:
        return x
    B, H, W, C = x.shape
    if C % 4 != 0:
        raise DimensionError(f"q_shift needs channels divisible by 4, got {C}")
    q = C // 4
    xp = pad2d(x, p, p, axes=(1, 2))
    up = xp[:, 0:H, p:p + W, 0:q]
    down = xp[:, 2 * p:2 * p + H, p:p + W, q:2 * q]
    left = xp[:, p:p + H, 0:W, 2 * q:3 * q]
    right = xp[:, p:p + H, 2 * p:2 * p + W, 3 * q:C]
    xprime = concat([up, down, left, right], axis=3)
    return x + (mu + 1.0) * xprime


class QShift:
    def __init__(self, store: ParamStore, name: str, p: int):
        self.p = p
        self.mu = store.zeros(f"{name}.mu", ())

    def __call__(self, x: Tensor) -> Tensor:
        return q_shift(x, self.mu, self.p)


class DcShift:
    """1x1 conv -> GeLU -> k x k depthwise conv -> GeLU -> 1x1 conv."""

    def __init__(self, store: ParamStore, name: str, channels: int, ks: int = 3):
        if ks % 2 == 0:
            raise DimensionError(f"depthwise kernel size must be odd, got {ks}")
        self.ks = ks
        self.inner = Linear(store, f"{name}.in", channels, channels, bias=True)
        self.dw_weight = store.trunc_normal(f"{name}.dw.weight", (channels, ks, ks))
        self.dw_bias = store.zeros(f"{name}.dw.bias", (channels,))
        self.outer = Linear(store, f"{name}.out", channels, channels, bias=True)

    def __call__(self, x: Tensor) -> Tensor:
        y = self.inner(x).gelu()
        y = depthwise_conv2d_nhwc(y, self.dw_weight, self.dw_bias, padding=self.ks // 2)
        return self.outer(y.gelu())


class SpatialMix:
    """Shift -> R/K/V projections -> WKV attention -> gated output projection.

    ``wkv`` picks the attention route: one fixed scan order (bi_h / bi_v) or
    the two-direction combination (cross).
    """

    def __init__(self, store: ParamStore, name: str, channels: int, cfg, block_index: int):
        self.channels = channels
        self.cfg = cfg
        variant = cfg.wkv
        if variant == "layer_cross":
            variant = "bi_h" if block_index % 2 == 0 else "bi_v"
        self.variant = variant
        shift = cfg.shift if cfg.conv_position == "replace" else (
            "q_shift" if cfg.shift != "none" else "none")
        if shift == "dc_shift":
            self.shift = DcShift(store, f"{name}.shift", channels, cfg.dc_shift_ks)
        elif shift == "q_shift":
            self.shift = QShift(store, f"{name}.shift", cfg.q_shift_p)
        else:
            self.shift = None
        self.w_r = Linear(store, f"{name}.r", channels, channels)
        self.w_k = Linear(store, f"{name}.k", channels, channels)
        self.w_v = Linear(store, f"{name}.v", channels, channels)
        self.w_o = Linear(store, f"{name}.o", channels, channels)
        if self.variant == "cross":
            self.p_h = store.wkv(f"{name}.wkv_h", channels)
            self.p_v = store.wkv(f"{name}.wkv_v", channels)
        else:
            self.p = store.wkv(f"{name}.wkv", channels)
        self.orders_used: list[str] = []

    def _attend(self, k: Tensor, v: Tensor) -> Tensor:
        if self.variant == "cross":
            self.orders_used = ["horizontal", "vertical"]
            return cross_biwkv(k, v, self.p_h, self.p_v, self.cfg.cross_combine)
        order = ScanOrder.HORIZONTAL if self.variant == "bi_h" else ScanOrder.VERTICAL
        self.orders_used = [order.value]
        return biwkv_2d(k, v, self.p, order)

    def __call__(self, x: Tensor) -> Tensor:
        xs = self.shift(x) if self.shift is not None else x
        r = self.w_r(xs)
        k = self.w_k(xs)
        v = self.w_v(xs)
        wkv = self._attend(k, v)
        return self.w_o(r.sigmoid() * wkv)


class ChannelMix:
    """Sigmoid receptance gate times a squared-ReLU keyed projection (2C hidden);
    strictly pointwise in space."""

    def __init__(self, store: ParamStore, name: str, channels: int):
        self.w_r = Linear(store, f"{name}.r", channels, channels)
        self.w_k = Linear(store, f"{name}.k", channels, 2 * channels)
        self.w_v = Linear(store, f"{name}.v", 2 * channels, channels)

    def __call__(self, x: Tensor) -> Tensor:
        gate = self.w_r(x).sigmoid()
        keyed = self.w_k(x).relu()
        return gate * (self.w_v(keyed * keyed))


class Mlp:
    def __init__(self, store: ParamStore, name: str, channels: int):
        self.fc1 = Linear(store, f"{name}.fc1", channels, 2 * channels, bias=True)
        self.fc2 = Linear(store, f"{name}.fc2", 2 * channels, channels, bias=True)

    def __call__(self, x: Tensor) -> Tensor:
        return self.fc2(self.fc1(x).gelu())


class Cab:
    """Conv block with channel attention (squeeze to C/4, sigmoid rescale)."""

    def __init__(self, store: ParamStore, name: str, channels: int):
        self.conv1 = Conv3x3(store, f"{name}.conv1", channels, channels)
        self.conv2 = Conv3x3(store, f"{name}.conv2", channels, channels)
        self.squeeze = Linear(store, f"{name}.squeeze", channels, channels // 4, bias=True)
        self.excite = Linear(store, f"{name}.excite", channels // 4, channels, bias=True)

    def __call__(self, x: Tensor) -> Tensor:
        y = self.conv2(self.conv1(x).gelu())
        pooled = y.mean(axis=(1, 2), keepdims=True)
        scale = self.excite(self.squeeze(pooled).relu()).sigmoid()
        return y * scale


def make_ffn(store: ParamStore, name: str, channels: int, kind: str):
    if kind == "channel_mix":
        return ChannelMix(store, name, channels)
    if kind == "mlp":
        return Mlp(store, name, channels)
    if kind == "cab":
        return Cab(store, name, channels)
    raise DimensionError(f"unknown ffn kind {kind!r}")


class Gllb:
    """Pre-norm block: x + SpatialMix(LN) residual, then a learnable-scale
    residual around the FFN. The optional standalone conv insertion points
    support the shift-position ablation."""

    def __init__(self, store: ParamStore, name: str, channels: int, cfg, block_index: int):
        self.ln1 = LayerNorm(store, f"{name}.ln1", channels)
        self.spatial = SpatialMix(store, f"{name}.sm", channels, cfg, block_index)
        self.ln2 = LayerNorm(store, f"{name}.ln2", channels)
        self.ffn = make_ffn(store, f"{name}.ffn", channels, cfg.ffn)
        self.res_scale = store.full(f"{name}.res_scale", (), 1.0)
        self.conv_position = cfg.conv_position
        if self.conv_position != "replace":
            self.aux_conv = DcShift(store, f"{name}.aux", channels, cfg.dc_shift_ks)

    def __call__(self, x: Tensor) -> Tensor:
        if self.conv_position == "before_sm":
            x = x + self.aux_conv(x)
        fg = x + self.spatial(self.ln1(x))
        if self.conv_position == "parallel":
            fg = fg + self.aux_conv(x)
        if self.conv_position == "between":
            fg = fg + self.aux_conv(fg)
        out = self.res_scale * fg + self.ffn(self.ln2(fg))
        if self.conv_position == "after_cm":
            out = out + self.aux_conv(out)
        return out


class Glll:
    """A run of blocks with a trailing 3x3 conv and a layer residual."""

    def __init__(self, store: ParamStore, name: str, channels: int, n_blocks: int,
                 cfg, first_block_index: int):
        self.blocks = [Gllb(store, f"{name}.block{i}", channels, cfg, first_block_index + i)
                       for i in range(n_blocks)]
        self.conv = Conv3x3(store, f"{name}.conv", channels, channels)

    def __call__(self, x: Tensor) -> Tensor:
        y = x
        for blk in self.blocks:
            y = blk(y)
        return x + self.conv(y)
