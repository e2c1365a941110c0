"""
Image encoder: mean-pooled initial query and a stack of X-Linear layers that
produce attended image-level features and enhanced region features.
"""

from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional

import numpy as np

from autograd import ContractError, DimensionError, Tensor, as_tensor, linear

from .attention import AttentionInputs, XLinearTrace, stack_forward
from .config import Activation
from .params import KVUpdateParams, ParamBundle, XLinearParams, uniform_init, zeros_init


@dataclass
class EncoderLayer(ParamBundle):
    attention: XLinearParams
    update: KVUpdateParams


@dataclass
class InputProjection(ParamBundle):
    """Linear map + ReLU from raw region features to D_v."""
    weight: Tensor
    bias: Tensor

    def __call__(self, regions: Tensor) -> Tensor:
        return linear(regions, self.weight, self.bias).relu()


@dataclass
class EncoderParams(ParamBundle):
    """(1+M) layers with distinct weights, plus an optional input projection."""
    layers: List[EncoderLayer] = field(default_factory=list)
    projection: Optional[InputProjection] = None

    @classmethod
    def create(
        cls,
        rng: np.random.Generator,
        raw_dim: Optional[int],
        region_dim: int,
        bilinear_dim: int,
        channel_dim: int,
        num_layers: int,
        activation: Activation = Activation.CELU_PLUS_ONE,
    ) -> "EncoderParams":
        """
        Build encoder weights.

        Args:
            rng: Source of initial weights
            raw_dim: Raw region feature dimension; None skips the projection
            region_dim: D_v
            bilinear_dim: D_B
            channel_dim: D_c
            num_layers: Number of X-Linear layers (1 + M, or 0 for none)
            activation: Activation of every block
        """
        projection = None
        if raw_dim is not None:
            projection = InputProjection(uniform_init(rng, region_dim, raw_dim), zeros_init(region_dim))
        layers = []
        for index in range(num_layers):
            query_dim = region_dim if index == 0 else bilinear_dim
            layers.append(EncoderLayer(
                attention=XLinearParams.create(
                    rng, query_dim, region_dim, region_dim, bilinear_dim, channel_dim, activation
                ),
                update=KVUpdateParams.create(rng, bilinear_dim, region_dim, region_dim),
            ))
        return cls(layers=layers, projection=projection)

    @property
    def num_layers(self) -> int:
        return len(self.layers)


class EncoderOutput(NamedTuple):
    """
    v_hats: [v̂^(0) (mean pool), v̂^(1), …, v̂^(1+M)]
    regions: enhanced region features V^(1+M), one row per input region
    traces: per-layer X-Linear traces when requested
    """
    v_hats: List[Tensor]
    regions: Tensor
    traces: Optional[List[XLinearTrace]] = None


def encode(params: EncoderParams, regions, keep_trace: bool = False) -> EncoderOutput:
    """
    Encode a set of N region features (optionally batched as (B, N, D)).

    Raises:
        ContractError: If the region set is empty
        DimensionError: If regions are not at least (N, D)
    """
    shape = regions.shape if isinstance(regions, Tensor) else np.shape(regions)
    if len(shape) < 2:
        raise DimensionError("regions must be (..., N, D)", shape)
    if shape[-2] < 1:
        raise ContractError("encode needs at least one region")
    regions = as_tensor(regions)
    if params.projection is not None:
        regions = params.projection(regions)

    pooled = regions.mean(axis=-2)
    if not params.layers:
        return EncoderOutput([pooled], regions, [] if keep_trace else None)

    blocks = [(layer.attention, layer.update) for layer in params.layers]
    stacked = stack_forward(blocks, AttentionInputs(pooled, regions, regions), keep_trace=keep_trace)
    return EncoderOutput([pooled] + stacked.v_hats, stacked.values, stacked.traces)
