"""
The full encoder–decoder captioning model.
"""

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from autograd import DimensionError, Tensor, log_softmax, stack

from .attention import AttentionTrace
from .config import ModelConfig
from .decoder import (
    DecoderParams,
    DecoderState,
    decode_step,
    global_image_feature,
    init_state,
)
from .encoder import EncoderOutput, EncoderParams, encode
from .params import ParamBundle


PAD_ID = 0
BOS_ID = 1
EOS_ID = 2
UNK_ID = 3
NON_EMITTABLE_IDS = (PAD_ID, BOS_ID)


@dataclass
class CaptionModel(ParamBundle):
    """Encoder and decoder weights together with the config that shaped them."""

    encoder: EncoderParams
    decoder: DecoderParams
    config: ModelConfig = ModelConfig()

    @classmethod
    def create(cls, config: ModelConfig, seed: int = 0) -> "CaptionModel":
        """Initialise every weight from a generator seeded with ``seed``."""
        rng = np.random.default_rng(seed)
        encoder = EncoderParams.create(
            rng,
            raw_dim=config.raw_feature_dim,
            region_dim=config.region_dim,
            bilinear_dim=config.bilinear_dim,
            channel_dim=config.channel_dim,
            num_layers=config.encoder_blocks,
            activation=config.activation,
        )
        decoder = DecoderParams.create(
            rng,
            vocab_size=config.vocab_size,
            word_dim=config.word_dim,
            hidden_dim=config.hidden_dim,
            region_dim=config.region_dim,
            bilinear_dim=config.bilinear_dim,
            channel_dim=config.channel_dim,
            encoder_layers=config.encoder_blocks,
            attention=config.attention_kind,
            activation=config.activation,
            conv_attention_dim=config.conv_attention_dim,
        )
        return cls(encoder=encoder, decoder=decoder, config=config)

    def parameter_shapes(self) -> Dict[str, Tuple[int, ...]]:
        return {name: t.shape for name, t in self.named_parameters()}

    def zero_grad(self) -> None:
        for t in self.parameters():
            t.grad = None

    # ------------------------------------------------------------------
    # Forward helpers
    # ------------------------------------------------------------------

    def encode(self, regions, keep_trace: bool = False) -> EncoderOutput:
        return encode(self.encoder, regions, keep_trace=keep_trace)

    def init_state(self, batch_shape: Tuple[int, ...] = ()) -> DecoderState:
        return init_state(self.decoder, batch_shape)

    def global_feature(self, enc: EncoderOutput) -> Tensor:
        return global_image_feature(self.decoder, enc)

    def step(
        self,
        state: DecoderState,
        token,
        enc: EncoderOutput,
        global_feature: Optional[Tensor] = None,
        keep_trace: bool = False,
    ) -> Tuple[Tensor, DecoderState, Optional[AttentionTrace]]:
        return decode_step(self.decoder, state, token, enc, global_feature, keep_trace)

    def step_log_probs(
        self,
        state: DecoderState,
        token,
        enc: EncoderOutput,
        global_feature: Optional[Tensor] = None,
        keep_trace: bool = False,
    ) -> Tuple[Tensor, DecoderState, Optional[AttentionTrace]]:
        """
        Log-probabilities of the next word with PAD and BOS excluded.

        Generation (greedy, beam, sampling) always goes through this method so
        every decoder sees the same distribution.
        """
        logits, state, trace = self.step(state, token, enc, global_feature, keep_trace)
        mask = np.zeros(logits.shape[-1])
        mask[list(NON_EMITTABLE_IDS)] = -np.inf
        return log_softmax(logits + mask, axis=-1), state, trace

    def teacher_forced_logits(self, enc: EncoderOutput, input_tokens: np.ndarray) -> Tensor:
        """
        Unroll the decoder over ``input_tokens`` (…, T) and stack the logits.

        Returns:
            Logits with shape (…, T, |Σ|), one vector per input position
        """
        input_tokens = np.asarray(input_tokens, dtype=np.int64)
        if input_tokens.ndim < 1:
            raise DimensionError("input tokens need a time axis", input_tokens.shape)
        state = self.init_state(input_tokens.shape[:-1])
        global_feature = self.global_feature(enc)
        outputs: List[Tensor] = []
        for t in range(input_tokens.shape[-1]):
            logits, state, _ = self.step(state, input_tokens[..., t], enc, global_feature)
            outputs.append(logits)
        return stack(outputs, axis=-2)
