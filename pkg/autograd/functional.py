"""
Differentiable functions over Tensor: normalisations and activations.

softmax, log_softmax and layer_norm are fused ops with closed-form backward
rules; the elementwise activations delegate to the Tensor methods.
"""

import numpy as np

from .errors import DimensionError
from .tensor import Tensor, as_tensor


LAYER_NORM_EPS = 1e-5


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    """
    Normalised exponential along ``axis``, computed after max-subtraction.

    Raises:
        DimensionError: If ``x`` is a scalar or has an empty axis
    """
    x = as_tensor(x)
    if x.ndim == 0:
        raise DimensionError("softmax needs at least one axis", x.shape)
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=axis, keepdims=True)

    def backward(g):
        return (out * (g - (g * out).sum(axis=axis, keepdims=True)),)

    return Tensor._from_op(out, (x,), backward, "softmax")


def log_softmax(x: Tensor, axis: int = -1) -> Tensor:
    """Log of softmax along ``axis``; stable for large logits."""
    x = as_tensor(x)
    if x.ndim == 0:
        raise DimensionError("log_softmax needs at least one axis", x.shape)
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=axis, keepdims=True))
    out = shifted - log_norm
    probs = np.exp(out)

    def backward(g):
        return (g - probs * g.sum(axis=axis, keepdims=True),)

    return Tensor._from_op(out, (x,), backward, "log_softmax")


def sigmoid(x: Tensor) -> Tensor:
    return as_tensor(x).sigmoid()


def relu(x: Tensor) -> Tensor:
    return as_tensor(x).relu()


def elu(x: Tensor) -> Tensor:
    return as_tensor(x).elu()


def celu_plus_one(x: Tensor) -> Tensor:
    """ELU(x) + 1: strictly positive, and exactly exp(x) for x < 0."""
    return as_tensor(x).celu_plus_one()


def exp(x: Tensor) -> Tensor:
    return as_tensor(x).exp()


def tanh(x: Tensor) -> Tensor:
    return as_tensor(x).tanh()


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = LAYER_NORM_EPS) -> Tensor:
    """
    Normalise the last axis to zero mean and unit population variance, then
    scale by ``gain`` and shift by ``bias``.

    Raises:
        DimensionError: If gain or bias do not match the feature axis
    """
    x = as_tensor(x)
    features = x.shape[-1]
    if gain.shape != (features,) or bias.shape != (features,):
        raise DimensionError("layer_norm gain/bias must match the feature axis", x.shape, gain.shape)
    mean = x.data.mean(axis=-1, keepdims=True)
    centered = x.data - mean
    inv_std = 1.0 / np.sqrt((centered * centered).mean(axis=-1, keepdims=True) + eps)
    normed = centered * inv_std
    gain_data = gain.data

    def backward(g):
        d_normed = g * gain_data
        grad_x = inv_std / features * (
            features * d_normed
            - d_normed.sum(axis=-1, keepdims=True)
            - normed * (d_normed * normed).sum(axis=-1, keepdims=True)
        )
        grad_gain = (g * normed).reshape(-1, features).sum(axis=0)
        grad_bias = g.reshape(-1, features).sum(axis=0)
        return grad_x, grad_gain, grad_bias

    return Tensor._from_op(normed * gain_data + bias.data, (x, gain, bias), backward, "layer_norm")
