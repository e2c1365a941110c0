"""
Attention over a set of key/value pairs.

Provides:
  - conventional additive attention (first-order query/key interaction)
  - the X-Linear block: bilinear query-key and query-value pooling with a
    spatial softmax over the set and squeeze-excitation channel gates
  - key/value refresh with residual connection and layer normalisation
  - stacking of blocks, each block querying with the previous attended feature

All functions accept an optional leading batch axis: the query is
``(..., D_q)`` and keys/values are ``(..., N, D)``.
"""

from typing import List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from autograd import (
    ContractError,
    DimensionError,
    Tensor,
    layer_norm,
    linear,
    softmax,
)

from .config import Activation
from .params import ConvAttnParams, KVUpdateParams, XLinearParams


# ============================================================================
# Data Models
# ============================================================================

class AttentionInputs(NamedTuple):
    """Query Q, keys K = {k_i} and values V = {v_i}."""
    query: Tensor
    keys: Tensor
    values: Tensor

    def validate(self) -> None:
        q, k, v = self.query.shape, self.keys.shape, self.values.shape
        if self.keys.ndim < 2 or self.values.ndim < 2:
            raise DimensionError("keys and values must be (..., N, D)", k, v)
        if k[:-1] != v[:-1]:
            raise DimensionError("keys and values must pair up", k, v)
        if q[:-1] != k[:-2]:
            raise DimensionError("query batch axes must match keys", q, k)

    @property
    def set_size(self) -> int:
        return self.keys.shape[-2]


class XLinearTrace(NamedTuple):
    """Intermediate quantities of one X-Linear block evaluation (detached)."""
    bilinear_keys: np.ndarray       # B^k_i        (..., N, D_B)
    transformed_keys: np.ndarray    # B'^k_i       (..., N, D_c)
    channel_descriptor: np.ndarray  # B̄            (..., D_c)
    spatial_logits: np.ndarray      # b^s          (..., N)
    spatial_weights: np.ndarray     # β^s          (..., N)
    channel_logits: np.ndarray      # b^c          (..., D_B)
    channel_weights: np.ndarray     # β^c          (..., D_B)
    bilinear_values: np.ndarray     # B^v_i        (..., N, D_B)


class ConvAttnTrace(NamedTuple):
    """Scores a and weights α of the conventional module (detached)."""
    scores: np.ndarray
    spatial_weights: np.ndarray


AttentionTrace = Union[XLinearTrace, ConvAttnTrace]


class StackOutput(NamedTuple):
    v_hats: List[Tensor]
    keys: Tensor
    values: Tensor
    traces: Optional[List[XLinearTrace]]


# ============================================================================
# Activations
# ============================================================================

def activate(x: Tensor, activation: Activation) -> Tensor:
    """Apply the block activation that stands in for σ at every act() site."""
    activation = Activation(activation)
    if activation is Activation.RELU:
        return x.relu()
    if activation is Activation.CELU_PLUS_ONE:
        return x.celu_plus_one()
    return x.exp()


# ============================================================================
# Attention operations
# ============================================================================

def conventional_attend(
    params: ConvAttnParams, inputs: AttentionInputs, keep_trace: bool = False
) -> Tuple[Tensor, Tensor, Optional[ConvAttnTrace]]:
    """
    a_i = W_a·tanh(W_k k_i + W_q Q); α = softmax(a); attended = Σ α_i v_i.

    Returns:
        Tuple of (attended value, attention weights α, optional trace)

    Raises:
        DimensionError: If the inputs or parameters have inconsistent shapes
    """
    inputs.validate()
    if params.w_q.shape[1] != inputs.query.shape[-1] or params.w_k.shape[1] != inputs.keys.shape[-1]:
        raise DimensionError(
            "conventional attention weights do not match inputs", params.w_k.shape, inputs.keys.shape
        )
    projected = linear(inputs.keys, params.w_k) + linear(inputs.query, params.w_q).unsqueeze(-2)
    scores = linear(projected.tanh(), params.w_a).squeeze(-1)
    weights = softmax(scores, axis=-1)
    attended = (weights.unsqueeze(-1) * inputs.values).sum(axis=-2)
    trace = ConvAttnTrace(scores.numpy(), weights.numpy()) if keep_trace else None
    return attended, weights, trace


def x_linear_attend(
    params: XLinearParams, inputs: AttentionInputs, keep_trace: bool = False
) -> Tuple[Tensor, Optional[XLinearTrace]]:
    """
    One X-Linear attention block.

    B^k_i = act(W_k k_i) ⊙ act(W_q^k Q) and B'^k_i = act(W_B^k B^k_i) feed two
    distributions: spatial β^s = softmax_i(W_b B'^k_i) and channel-wise
    β^c = sigmoid(W_e mean_i B'^k_i). The attended feature is
    v̂ = β^c ⊙ Σ_i β^s_i (act(W_v v_i) ⊙ act(W_q^v Q)).

    Args:
        params: Block weights and activation switch
        inputs: Query, keys and values
        keep_trace: Whether to return the detached intermediate quantities

    Returns:
        Tuple of (v̂ with trailing extent D_B, trace or None)

    Raises:
        DimensionError: If the inputs or parameters have inconsistent shapes
    """
    inputs.validate()
    if (
        params.w_qk.shape[1] != inputs.query.shape[-1]
        or params.w_k.shape[1] != inputs.keys.shape[-1]
        or params.w_v.shape[1] != inputs.values.shape[-1]
    ):
        raise DimensionError(
            "X-Linear weights do not match inputs",
            params.w_k.shape, inputs.keys.shape, inputs.values.shape,
        )
    act = params.activation
    query = inputs.query

    bilinear_keys = activate(linear(inputs.keys, params.w_k), act) * activate(
        linear(query, params.w_qk), act
    ).unsqueeze(-2)
    transformed = activate(linear(bilinear_keys, params.w_bk), act)

    spatial_logits = linear(transformed, params.w_b).squeeze(-1)
    spatial = softmax(spatial_logits, axis=-1)

    descriptor = transformed.mean(axis=-2)
    channel_logits = linear(descriptor, params.w_e)
    channel = channel_logits.sigmoid()

    bilinear_values = activate(linear(inputs.values, params.w_v), act) * activate(
        linear(query, params.w_qv), act
    ).unsqueeze(-2)
    v_hat = channel * (spatial.unsqueeze(-1) * bilinear_values).sum(axis=-2)

    trace = None
    if keep_trace:
        trace = XLinearTrace(
            bilinear_keys=bilinear_keys.numpy(),
            transformed_keys=transformed.numpy(),
            channel_descriptor=descriptor.numpy(),
            spatial_logits=spatial_logits.numpy(),
            spatial_weights=spatial.numpy(),
            channel_logits=channel_logits.numpy(),
            channel_weights=channel.numpy(),
            bilinear_values=bilinear_values.numpy(),
        )
    return v_hat, trace


def kv_update(
    params: KVUpdateParams, v_hat: Tensor, keys: Tensor, values: Tensor
) -> Tuple[Tensor, Tensor]:
    """
    k'_i = LayerNorm(relu(W_m^k [v̂; k_i]) + k_i), and likewise for values.

    The concatenation is applied as the sum of the two column blocks of W_m,
    which avoids materialising N copies of v̂.

    Raises:
        DimensionError: If W_m does not fit [v̂; k_i] / [v̂; v_i]
    """
    d_b = v_hat.shape[-1]
    if params.w_km.shape != (keys.shape[-1], d_b + keys.shape[-1]):
        raise DimensionError("key update weight does not fit [v_hat; k_i]", params.w_km.shape, keys.shape)
    if params.w_vm.shape != (values.shape[-1], d_b + values.shape[-1]):
        raise DimensionError("value update weight does not fit [v_hat; v_i]", params.w_vm.shape, values.shape)

    def refresh(weight: Tensor, items: Tensor, gain: Tensor, bias: Tensor) -> Tensor:
        from_attended = linear(v_hat, weight[:, :d_b]).unsqueeze(-2)
        from_items = linear(items, weight[:, d_b:])
        return layer_norm((from_attended + from_items).relu() + items, gain, bias)

    new_keys = refresh(params.w_km, keys, params.key_gain, params.key_bias)
    new_values = refresh(params.w_vm, values, params.value_gain, params.value_bias)
    return new_keys, new_values


def stack_forward(
    blocks: Sequence[Tuple[XLinearParams, KVUpdateParams]],
    inputs: AttentionInputs,
    keep_trace: bool = False,
) -> StackOutput:
    """
    Run M blocks: v̂^(m) = X-Linear(v̂^(m−1), K^(m−1), V^(m−1)), then refresh
    keys and values with v̂^(m). Starts from v̂^(0) = Q, K^(0) = K, V^(0) = V.

    Returns:
        StackOutput with the M attended features, final keys/values and,
        when requested, the M traces

    Raises:
        ContractError: If ``blocks`` is empty
    """
    if not blocks:
        raise ContractError("stack_forward needs at least one block")
    query, keys, values = inputs
    v_hats: List[Tensor] = []
    traces: List[XLinearTrace] = []
    for xlinear_params, update_params in blocks:
        query, trace = x_linear_attend(
            xlinear_params, AttentionInputs(query, keys, values), keep_trace=keep_trace
        )
        keys, values = kv_update(update_params, query, keys, values)
        v_hats.append(query)
        if trace is not None:
            traces.append(trace)
    return StackOutput(v_hats, keys, values, traces if keep_trace else None)
