"""
Sentence decoder: word embedding, global image feature, LSTM, one attention
block over the enhanced region features, GLU context and vocabulary logits.
"""

from dataclasses import dataclass
from typing import NamedTuple, Optional, Tuple, Union

import numpy as np

from autograd import ContractError, DimensionError, Tensor, concat, linear

from .attention import (
    AttentionInputs,
    AttentionTrace,
    conventional_attend,
    x_linear_attend,
)
from .config import Activation, AttentionKind
from .encoder import EncoderOutput
from .params import (
    ConvAttnParams,
    ParamBundle,
    XLinearParams,
    uniform_init,
    zeros_init,
)


FORGET_GATE_BIAS = 1.0


@dataclass
class DecoderParams(ParamBundle):
    embedding: Tensor     # |Σ| × D_w
    w_g: Tensor           # D_h × (D_v + L·D_B)
    lstm_w: Tensor        # 4D_h × (D_w + D_h + D_h + D_h)
    lstm_b: Tensor        # 4D_h
    attention: Union[XLinearParams, ConvAttnParams]
    w_c: Tensor           # 2D_h × (D_att + D_h)
    b_c: Tensor           # 2D_h
    w_out: Tensor         # |Σ| × D_h
    b_out: Tensor         # |Σ|

    @classmethod
    def create(
        cls,
        rng: np.random.Generator,
        vocab_size: int,
        word_dim: int,
        hidden_dim: int,
        region_dim: int,
        bilinear_dim: int,
        channel_dim: int,
        encoder_layers: int,
        attention: AttentionKind = AttentionKind.XLINEAR,
        activation: Activation = Activation.CELU_PLUS_ONE,
        conv_attention_dim: int = 32,
    ) -> "DecoderParams":
        global_in = region_dim + encoder_layers * bilinear_dim
        lstm_in = word_dim + 3 * hidden_dim
        lstm_b = np.zeros(4 * hidden_dim)
        lstm_b[hidden_dim:2 * hidden_dim] = FORGET_GATE_BIAS

        if AttentionKind(attention) is AttentionKind.XLINEAR:
            attention_params = XLinearParams.create(
                rng, hidden_dim, region_dim, region_dim, bilinear_dim, channel_dim, activation
            )
            attended_dim = bilinear_dim
        else:
            attention_params = ConvAttnParams.create(rng, hidden_dim, region_dim, conv_attention_dim)
            attended_dim = region_dim

        return cls(
            embedding=Tensor(rng.uniform(-0.1, 0.1, size=(vocab_size, word_dim)), requires_grad=True),
            w_g=uniform_init(rng, hidden_dim, global_in),
            lstm_w=uniform_init(rng, 4 * hidden_dim, lstm_in),
            lstm_b=Tensor(lstm_b, requires_grad=True),
            attention=attention_params,
            w_c=uniform_init(rng, 2 * hidden_dim, attended_dim + hidden_dim),
            b_c=zeros_init(2 * hidden_dim),
            w_out=uniform_init(rng, vocab_size, hidden_dim),
            b_out=zeros_init(vocab_size),
        )

    @property
    def vocab_size(self) -> int:
        return self.embedding.shape[0]

    @property
    def hidden_dim(self) -> int:
        return self.w_out.shape[1]


class DecoderState(NamedTuple):
    """LSTM hidden/cell state, previous context vector and step index."""
    h: Tensor
    cell: Tensor
    context: Tensor
    step: int = 0


# ============================================================================
# Operations
# ============================================================================

def glu(x: Tensor) -> Tensor:
    """
    Gated linear unit over the last axis: first half ⊙ sigmoid(second half).

    Raises:
        DimensionError: If the last extent is odd
    """
    width = x.shape[-1]
    if width % 2:
        raise DimensionError("glu needs an even last extent", x.shape)
    half = width // 2
    return x[..., :half] * x[..., half:].sigmoid()


def global_image_feature(params: DecoderParams, enc: EncoderOutput) -> Tensor:
    """ṽ = W_G · [v̂^(0); v̂^(1); …; v̂^(1+M)]."""
    joined = concat(list(enc.v_hats), axis=-1)
    if joined.shape[-1] != params.w_g.shape[1]:
        raise DimensionError("W_G does not match the attended features", params.w_g.shape, joined.shape)
    return linear(joined, params.w_g)


def init_state(params: DecoderParams, batch_shape: Tuple[int, ...] = ()) -> DecoderState:
    """All-zero h, cell and previous context; t = 0."""
    shape = tuple(batch_shape) + (params.hidden_dim,)
    return DecoderState(Tensor.zeros(shape), Tensor.zeros(shape), Tensor.zeros(shape), 0)


def decode_step(
    params: DecoderParams,
    state: DecoderState,
    token,
    enc: EncoderOutput,
    global_feature: Optional[Tensor] = None,
    keep_trace: bool = False,
) -> Tuple[Tensor, DecoderState, Optional[AttentionTrace]]:
    """
    Advance the decoder by one word.

    The LSTM consumes [embed(token); ṽ; h_{t−1}; c_{t−1}]; its output h_t
    queries the enhanced regions; c_t = GLU(W_c [v̂_d; h_t] + b_c) and the
    logits are the output projection of c_t.

    Args:
        params: Decoder weights
        state: Previous state
        token: Word id, or an int array of ids matching the state's batch axes
        enc: Encoder output for the same image(s)
        global_feature: Precomputed ṽ (computed from ``enc`` when omitted)
        keep_trace: Whether to return the attention trace

    Returns:
        Tuple of (logits over the vocabulary, next state, trace or None)

    Raises:
        ContractError: If any token id is outside the vocabulary
    """
    ids = np.asarray(token, dtype=np.int64)
    if ids.shape != state.h.shape[:-1]:
        raise DimensionError("token ids must match the state batch axes", ids.shape, state.h.shape)
    if ids.size and (ids.min() < 0 or ids.max() >= params.vocab_size):
        raise ContractError(f"token id out of vocabulary (size {params.vocab_size}): {ids.tolist()}")

    if global_feature is None:
        global_feature = global_image_feature(params, enc)
    words = params.embedding[ids]
    hidden = params.hidden_dim

    lstm_in = concat([words, global_feature, state.h, state.context], axis=-1)
    gates = linear(lstm_in, params.lstm_w, params.lstm_b)
    in_gate = gates[..., :hidden].sigmoid()
    forget_gate = gates[..., hidden:2 * hidden].sigmoid()
    candidate = gates[..., 2 * hidden:3 * hidden].tanh()
    out_gate = gates[..., 3 * hidden:].sigmoid()
    cell = forget_gate * state.cell + in_gate * candidate
    h = out_gate * cell.tanh()

    inputs = AttentionInputs(h, enc.regions, enc.regions)
    if isinstance(params.attention, XLinearParams):
        attended, trace = x_linear_attend(params.attention, inputs, keep_trace=keep_trace)
    else:
        attended, _, trace = conventional_attend(params.attention, inputs, keep_trace=keep_trace)

    context = glu(linear(concat([attended, h], axis=-1), params.w_c, params.b_c))
    logits = linear(context, params.w_out, params.b_out)
    return logits, DecoderState(h, cell, context, state.step + 1), trace
