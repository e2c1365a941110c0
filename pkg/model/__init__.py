"""
Model Package

X-Linear attention blocks, the (1+M)-layer image encoder, the LSTM sentence
decoder and the full captioning model.
"""

from .config import Activation, AttentionKind, ModelConfig, MAX_ENCODER_BLOCKS
from .params import (
    ConvAttnParams,
    KVUpdateParams,
    ParamBundle,
    XLinearParams,
    uniform_init,
)
from .attention import (
    AttentionInputs,
    ConvAttnTrace,
    StackOutput,
    XLinearTrace,
    activate,
    conventional_attend,
    kv_update,
    stack_forward,
    x_linear_attend,
)
from .encoder import EncoderLayer, EncoderOutput, EncoderParams, InputProjection, encode
from .decoder import (
    DecoderParams,
    DecoderState,
    decode_step,
    global_image_feature,
    glu,
    init_state,
)
from .captioner import BOS_ID, EOS_ID, PAD_ID, UNK_ID, CaptionModel

__all__ = [
    "Activation",
    "AttentionKind",
    "ModelConfig",
    "MAX_ENCODER_BLOCKS",
    "ConvAttnParams",
    "KVUpdateParams",
    "ParamBundle",
    "XLinearParams",
    "uniform_init",
    "AttentionInputs",
    "ConvAttnTrace",
    "StackOutput",
    "XLinearTrace",
    "activate",
    "conventional_attend",
    "kv_update",
    "stack_forward",
    "x_linear_attend",
    "EncoderLayer",
    "EncoderOutput",
    "EncoderParams",
    "InputProjection",
    "encode",
    "DecoderParams",
    "DecoderState",
    "decode_step",
    "global_image_feature",
    "glu",
    "init_state",
    "BOS_ID",
    "EOS_ID",
    "PAD_ID",
    "UNK_ID",
    "CaptionModel",
]
