"""
Autograd Package

Float64 tensors with reverse-mode differentiation: the numerical substrate
for the attention blocks, the captioning model and its training.
"""

from .errors import ContractError, DimensionError
from .tensor import (
    ComputeGraph,
    Tensor,
    as_tensor,
    backward,
    concat,
    is_grad_enabled,
    linear,
    matmul,
    no_grad,
    stack,
    zero_grad,
)
from .functional import (
    LAYER_NORM_EPS,
    celu_plus_one,
    elu,
    exp,
    layer_norm,
    log_softmax,
    relu,
    sigmoid,
    softmax,
    tanh,
)

__all__ = [
    "ContractError",
    "DimensionError",
    "ComputeGraph",
    "Tensor",
    "as_tensor",
    "backward",
    "concat",
    "is_grad_enabled",
    "linear",
    "matmul",
    "no_grad",
    "stack",
    "zero_grad",
    "LAYER_NORM_EPS",
    "celu_plus_one",
    "elu",
    "exp",
    "layer_norm",
    "log_softmax",
    "relu",
    "sigmoid",
    "softmax",
    "tanh",
]
