"""Tape-based reverse-mode differentiation over numpy arrays."""

from src.autodiff.tensor import (
    Tensor,
    Tape,
    backward,
    accumulate_grad,
    current_tape,
    get_default_dtype,
    set_default_dtype,
)
from src.autodiff.ops import (
    relu,
    conv2d,
    maxpool2d,
    nearest_upsample,
    concat_channels,
    fully_connected,
    flatten,
    channels_to_rows,
    scatter_cells,
    select_rows,
    mul,
    total,
)
from src.autodiff.losses import masked_softmax_cross_entropy, softmax
from src.autodiff.optim import Adam, AdamState, adam_update
from src.autodiff.gradcheck import finite_difference_gradient, relative_error

__all__ = [
    "Tensor",
    "Tape",
    "backward",
    "accumulate_grad",
    "current_tape",
    "get_default_dtype",
    "set_default_dtype",
    "relu",
    "conv2d",
    "maxpool2d",
    "nearest_upsample",
    "concat_channels",
    "fully_connected",
    "flatten",
    "channels_to_rows",
    "scatter_cells",
    "select_rows",
    "mul",
    "total",
    "masked_softmax_cross_entropy",
    "softmax",
    "Adam",
    "AdamState",
    "adam_update",
    "finite_difference_gradient",
    "relative_error",
]
