"""
Model configuration.

Defaults are desk scale (toy task); ``cli.config.CocoConfig`` carries the
COCO-scale dimensions.
"""

from dataclasses import asdict, dataclass
from enum import Enum


class AttentionKind(str, Enum):
    """Decoder attention module."""
    XLINEAR = "xlinear"
    CONVENTIONAL = "conventional"


class Activation(str, Enum):
    """Activation used at every act() site of an X-Linear block."""
    RELU = "relu"
    CELU_PLUS_ONE = "celu_plus_one"
    EXP = "exp"


MAX_ENCODER_BLOCKS = 4


@dataclass(frozen=True)
class ModelConfig:
    """Dimensions and architecture switches of the captioning model."""

    vocab_size: int = 17
    raw_feature_dim: int = 15
    region_dim: int = 32          # D_v
    bilinear_dim: int = 32        # D_B
    channel_dim: int = 16         # D_c
    hidden_dim: int = 32          # D_h
    word_dim: int = 16            # D_w
    conv_attention_dim: int = 32  # hidden size of the conventional module
    encoder_blocks: int = 4       # 1 + M; 0 disables the encoder stack
    decoder_attention: str = AttentionKind.XLINEAR.value
    elu: bool = True
    max_caption_len: int = 16

    @property
    def activation(self) -> Activation:
        return Activation.CELU_PLUS_ONE if self.elu else Activation.RELU

    @property
    def attention_kind(self) -> AttentionKind:
        return AttentionKind(self.decoder_attention)

    def to_dict(self) -> dict:
        return asdict(self)
