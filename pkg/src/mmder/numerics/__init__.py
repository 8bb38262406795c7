"""Tensor arithmetic, gradient tape, initializers and the AdamW rule."""

from .init import sinusoidal_table, trunc_normal
from .optim import AdamW, AdamWState, adamw_step
from .tensor import (
    Tensor,
    add,
    as_tensor,
    backward,
    cross_entropy,
    default_dtype,
    gelu,
    get_default_dtype,
    layer_norm,
    matmul,
    mean,
    mul,
    no_grad,
    reshape,
    set_default_dtype,
    softmax_rows,
    sub,
    sum,
    transpose,
)

__all__ = [
    "AdamW",
    "AdamWState",
    "Tensor",
    "adamw_step",
    "add",
    "as_tensor",
    "backward",
    "cross_entropy",
    "default_dtype",
    "gelu",
    "get_default_dtype",
    "layer_norm",
    "matmul",
    "mean",
    "mul",
    "no_grad",
    "reshape",
    "set_default_dtype",
    "sinusoidal_table",
    "softmax_rows",
    "sub",
    "sum",
    "transpose",
    "trunc_normal",
]
