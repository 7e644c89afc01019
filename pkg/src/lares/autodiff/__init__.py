from lares.autodiff.tensor import (
    Tape,
    Tensor,
    concat,
    exp,
    gelu,
    log,
    no_grad,
    ones,
    pad2d,
    relu,
    sigmoid,
    tensor,
    zeros,
)
from lares.autodiff.nn_ops import (
    conv2d,
    conv2d_nhwc,
    depthwise_conv2d,
    depthwise_conv2d_nhwc,
    layer_norm,
    pixel_shuffle,
    pixel_shuffle_nhwc,
    pixel_unshuffle,
)
from lares.autodiff.checkpoint import load_checkpoint, save_checkpoint

__all__ = [
    "Tape",
    "Tensor",
    "concat",
    "conv2d",
    "conv2d_nhwc",
    "depthwise_conv2d",
    "depthwise_conv2d_nhwc",
    "exp",
    "gelu",
    "layer_norm",
    "load_checkpoint",
    "log",
    "no_grad",
    "ones",
    "pad2d",
    "pixel_shuffle",
    "pixel_shuffle_nhwc",
    "pixel_unshuffle",
    "relu",
    "save_checkpoint",
    "sigmoid",
    "tensor",
    "zeros",
]
