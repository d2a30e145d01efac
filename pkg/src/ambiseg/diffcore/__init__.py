"""Differentiable numerical primitives with reverse-mode gradients."""

from .gradcheck import grad_check
from .ops import (
    bilinear_resize,
    broadcast_spatial,
    concat_channels,
    conv2d,
    cross_entropy_masked,
    dropout,
    global_avg_pool,
    relu,
    softmax_channels,
)
from .optim import ParamStore, adam_step
from .rng import RngStream
from .tensor import DiffTensor, ShapeError, as_tensor, backward, no_grad

__all__ = [
    "DiffTensor",
    "ParamStore",
    "RngStream",
    "ShapeError",
    "adam_step",
    "as_tensor",
    "backward",
    "bilinear_resize",
    "broadcast_spatial",
    "concat_channels",
    "conv2d",
    "cross_entropy_masked",
    "dropout",
    "global_avg_pool",
    "grad_check",
    "no_grad",
    "relu",
    "softmax_channels",
]
