"""Structured differentiable ops: convolutions, layer norm, pixel shuffle.

Convolutions run on channels-last maps internally (one explicit im2col, then
a single GEMM); the channels-first entry points are thin layout wrappers.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from lares.autodiff.tensor import Tensor
from lares.errors import DimensionError


def _im2col_nhwc(x: np.ndarray, kh: int, kw: int, pad: int) -> np.ndarray:
    """(B, H, W, C) -> contiguous (B, H', W', C * kh * kw) patch matrix."""
    if pad:
        x = np.pad(x, ((0, 0), (pad, pad), (pad, pad), (0, 0)))
    win = sliding_window_view(x, (kh, kw), axis=(1, 2))   # (B, H', W', C, kh, kw)
    B, Ho, Wo = win.shape[:3]
    return np.ascontiguousarray(win).reshape(B, Ho, Wo, -1)


def conv2d_nhwc(x: Tensor, kernel: Tensor, bias: Tensor, padding: int) -> Tensor:
    """Stride-1 cross-correlation on (B, H, W, Cin) with zero padding.

    kernel: (Cout, Cin, kh, kw); bias: (Cout,). Differentiable in all three.
    """
    if x.ndim != 4 or kernel.ndim != 4:
        raise DimensionError(f"conv2d expects 4D x and kernel, got {x.shape}, {kernel.shape}")
    B, H, W, Cin = x.shape
    Cout, Cin_k, kh, kw = kernel.shape
    if Cin != Cin_k:
        raise DimensionError(f"conv2d channel mismatch: x has {Cin}, kernel expects {Cin_k}")
    if kh % 2 == 0 or kw % 2 == 0:
        raise DimensionError(f"conv2d kernel sides must be odd, got {kh}x{kw}")
    if bias.shape != (Cout,):
        raise DimensionError(f"conv2d bias must be ({Cout},), got {bias.shape}")
    if H + 2 * padding < kh or W + 2 * padding < kw:
        raise DimensionError("conv2d input smaller than kernel after padding")

    # kernel as a (C*kh*kw, Cout) matrix in the im2col index order (c, i, j)
    wmat = np.ascontiguousarray(kernel.data.transpose(1, 2, 3, 0).reshape(-1, Cout))
    col = _im2col_nhwc(x.data, kh, kw, padding)
    Ho, Wo = col.shape[1], col.shape[2]
    out = col.reshape(-1, col.shape[3]) @ wmat + bias.data
    out = out.reshape(B, Ho, Wo, Cout)

    def vjp(g):
        gr = np.ascontiguousarray(g)
        g2 = gr.reshape(-1, Cout)
        gb = g2.sum(axis=0)
        gw = (col.reshape(-1, col.shape[3]).T @ g2)          # (Cin*kh*kw, Cout)
        gk = gw.reshape(Cin, kh, kw, Cout).transpose(3, 0, 1, 2)
        # col2im: scatter patch gradients back onto the padded input grid
        gcol = (g2 @ wmat.T).reshape(B, Ho, Wo, Cin, kh, kw)
        gxp = np.zeros((B, H + 2 * padding, W + 2 * padding, Cin), dtype=x.dtype)
        for i in range(kh):
            for j in range(kw):
                gxp[:, i:i + Ho, j:j + Wo, :] += gcol[:, :, :, :, i, j]
        gx = gxp[:, padding:padding + H, padding:padding + W, :] if padding else gxp
        return np.ascontiguousarray(gx), np.ascontiguousarray(gk), gb

    return Tensor._from_op(out, (x, kernel, bias), vjp)


def depthwise_conv2d_nhwc(x: Tensor, kernel: Tensor, bias: Tensor, padding: int) -> Tensor:
    """Per-channel stride-1 cross-correlation on (B, H, W, C) maps.

    kernel: (C, kh, kw); bias: (C,). Channel c of the output sees only
    channel c of the input.
    """
    if x.ndim != 4 or kernel.ndim != 3:
        raise DimensionError(
            f"depthwise_conv2d expects 4D x, 3D kernel, got {x.shape}, {kernel.shape}")
    B, H, W, C = x.shape
    Ck, kh, kw = kernel.shape
    if C != Ck:
        raise DimensionError(f"depthwise channel mismatch: x has {C}, kernel has {Ck}")
    if kh % 2 == 0 or kw % 2 == 0:
        raise DimensionError(f"depthwise kernel sides must be odd, got {kh}x{kw}")
    if bias.shape != (C,):
        raise DimensionError(f"depthwise bias must be ({C},), got {bias.shape}")

    xp = np.pad(x.data, ((0, 0), (padding, padding), (padding, padding), (0, 0))) \
        if padding else x.data
    out = np.zeros((B, xp.shape[1] - kh + 1, xp.shape[2] - kw + 1, C), dtype=x.dtype)
    Ho, Wo = out.shape[1], out.shape[2]
    for i in range(kh):
        for j in range(kw):
            out += xp[:, i:i + Ho, j:j + Wo, :] * kernel.data[:, i, j]
    out += bias.data

    def vjp(g):
        g = np.ascontiguousarray(g)
        gb = g.sum(axis=(0, 1, 2))
        gk = np.empty_like(kernel.data)
        gxp = np.zeros_like(xp)
        for i in range(kh):
            for j in range(kw):
                patch = xp[:, i:i + Ho, j:j + Wo, :]
                gk[:, i, j] = np.einsum("bhwc,bhwc->c", g, patch)
                gxp[:, i:i + Ho, j:j + Wo, :] += g * kernel.data[:, i, j]
        gx = gxp[:, padding:padding + H, padding:padding + W, :] if padding else gxp
        return np.ascontiguousarray(gx), gk, gb

    return Tensor._from_op(out, (x, kernel, bias), vjp)


def conv2d(x: Tensor, kernel: Tensor, bias: Tensor, padding: int) -> Tensor:
    """2D cross-correlation with zero padding, stride 1.

    x: (B, Cin, H, W); kernel: (Cout, Cin, kh, kw); bias: (Cout,).
    Output spatial size is H - kh + 1 + 2*padding (same-size for
    padding = (k - 1) // 2 and odd k).
    """
    if x.ndim != 4:
        raise DimensionError(f"conv2d expects 4D input, got {x.shape}")
    y = conv2d_nhwc(x.transpose(0, 2, 3, 1), kernel, bias, padding)
    return y.transpose(0, 3, 1, 2)


def depthwise_conv2d(x: Tensor, kernel: Tensor, bias: Tensor, padding: int) -> Tensor:
    """Per-channel 2D cross-correlation: channel c of the output sees only
    channel c of the input. x: (B, C, H, W); kernel: (C, kh, kw); bias: (C,)."""
    if x.ndim != 4:
        raise DimensionError(f"depthwise_conv2d expects 4D input, got {x.shape}")
    y = depthwise_conv2d_nhwc(x.transpose(0, 2, 3, 1), kernel, bias, padding)
    return y.transpose(0, 3, 1, 2)


def layer_norm(x: Tensor, gamma: Tensor, beta: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalize over the trailing channel axis, then apply the affine pair."""
    C = x.shape[-1] if x.ndim else 0
    if C == 0:
        raise DimensionError("layer_norm needs a non-empty trailing channel axis")
    if gamma.shape != (C,) or beta.shape != (C,):
        raise DimensionError(f"layer_norm affine must be ({C},), got {gamma.shape}, {beta.shape}")
    if eps <= 0:
        raise DimensionError("layer_norm eps must be positive")

    mu = x.data.mean(axis=-1, keepdims=True)
    xc = x.data - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + np.asarray(eps, dtype=x.dtype))
    xhat = xc * inv
    out = xhat * gamma.data + beta.data

    def vjp(g):
        gbeta = g.reshape(-1, C).sum(axis=0)
        ggamma = (g * xhat).reshape(-1, C).sum(axis=0)
        gxhat = g * gamma.data
        gx = inv / C * (C * gxhat
                        - gxhat.sum(axis=-1, keepdims=True)
                        - xhat * (gxhat * xhat).sum(axis=-1, keepdims=True))
        return gx.astype(x.dtype, copy=False), ggamma, gbeta

    return Tensor._from_op(out, (x, gamma, beta), vjp)


def pixel_shuffle(x: Tensor, s: int) -> Tensor:
    """Rearrange (B, C*s^2, H, W) into (B, C, H*s, W*s); bijective, sum-preserving."""
    if x.ndim != 4:
        raise DimensionError(f"pixel_shuffle expects (B, C*s^2, H, W), got {x.shape}")
    B, Cs2, H, W = x.shape
    if s < 1 or Cs2 % (s * s) != 0:
        raise DimensionError(f"pixel_shuffle: {Cs2} channels not divisible by s^2={s * s}")
    C = Cs2 // (s * s)
    out = (x.data.reshape(B, C, s, s, H, W)
           .transpose(0, 1, 4, 2, 5, 3)
           .reshape(B, C, H * s, W * s))
    out = np.ascontiguousarray(out)

    def vjp(g):
        gx = (g.reshape(B, C, H, s, W, s)
              .transpose(0, 1, 3, 5, 2, 4)
              .reshape(B, Cs2, H, W))
        return (np.ascontiguousarray(gx),)

    return Tensor._from_op(out, (x,), vjp)


def pixel_shuffle_nhwc(x: Tensor, s: int) -> Tensor:
    """Rearrange (B, H, W, C*s^2) into (B, H*s, W*s, C)."""
    if x.ndim != 4:
        raise DimensionError(f"pixel_shuffle expects 4D input, got {x.shape}")
    B, H, W, Cs2 = x.shape
    if s < 1 or Cs2 % (s * s) != 0:
        raise DimensionError(f"pixel_shuffle: {Cs2} channels not divisible by s^2={s * s}")
    C = Cs2 // (s * s)
    out = (x.data.reshape(B, H, W, C, s, s)
           .transpose(0, 1, 4, 2, 5, 3)
           .reshape(B, H * s, W * s, C))
    out = np.ascontiguousarray(out)

    def vjp(g):
        gx = (g.reshape(B, H, s, W, s, C)
              .transpose(0, 1, 3, 5, 2, 4)
              .reshape(B, H, W, Cs2))
        return (np.ascontiguousarray(gx),)

    return Tensor._from_op(out, (x,), vjp)


def pixel_unshuffle(x: Tensor, s: int) -> Tensor:
    """Inverse of pixel_shuffle: (B, C, H*s, W*s) -> (B, C*s^2, H, W)."""
    if x.ndim != 4:
        raise DimensionError(f"pixel_unshuffle expects 4D input, got {x.shape}")
    B, C, Hs, Ws = x.shape
    if s < 1 or Hs % s or Ws % s:
        raise DimensionError(f"pixel_unshuffle: spatial dims {Hs}x{Ws} not divisible by {s}")
    H, W = Hs // s, Ws // s
    out = (x.data.reshape(B, C, H, s, W, s)
           .transpose(0, 1, 3, 5, 2, 4)
           .reshape(B, C * s * s, H, W))
    out = np.ascontiguousarray(out)

    def vjp(g):
        gx = (g.reshape(B, C, s, s, H, W)
              .transpose(0, 1, 4, 2, 5, 3)
              .reshape(B, C, Hs, Ws))
        return (np.ascontiguousarray(gx),)

    return Tensor._from_op(out, (x,), vjp)
