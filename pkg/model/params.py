"""
Learnable weight bundles and their initialisation.

Every bundle is a dataclass whose Tensor fields (possibly nested in other
bundles or lists) are its parameters; ``named_parameters`` walks them in
field order, which fixes checkpoint and optimizer ordering.
"""

import math
from dataclasses import dataclass, fields
from typing import Dict, Iterator, List, Tuple

import numpy as np

from autograd import Tensor

from .config import Activation


# ============================================================================
# Initialisation
# ============================================================================

def uniform_init(rng: np.random.Generator, out_dim: int, in_dim: int) -> Tensor:
    """Uniform(−s, s) with s = sqrt(6 / (fan_in + fan_out))."""
    bound = math.sqrt(6.0 / (in_dim + out_dim))
    return Tensor(rng.uniform(-bound, bound, size=(out_dim, in_dim)), requires_grad=True)


def zeros_init(*shape: int) -> Tensor:
    return Tensor(np.zeros(shape), requires_grad=True)


def ones_init(*shape: int) -> Tensor:
    return Tensor(np.ones(shape), requires_grad=True)


# ============================================================================
# Bundle base
# ============================================================================

class ParamBundle:
    """Mixin giving dataclass bundles a stable parameter walk."""

    def named_parameters(self, prefix: str = "") -> Iterator[Tuple[str, Tensor]]:
        for f in fields(self):
            yield from _walk(getattr(self, f.name), f"{prefix}{f.name}")

    def parameters(self) -> List[Tensor]:
        return [t for _, t in self.named_parameters()]

    def parameter_dict(self) -> Dict[str, Tensor]:
        return dict(self.named_parameters())


def _walk(value, name: str) -> Iterator[Tuple[str, Tensor]]:
    if isinstance(value, Tensor):
        yield name, value
    elif isinstance(value, ParamBundle):
        yield from value.named_parameters(prefix=f"{name}.")
    elif isinstance(value, (list, tuple)):
        for i, item in enumerate(value):
            yield from _walk(item, f"{name}.{i}")


# ============================================================================
# Attention bundles
# ============================================================================

@dataclass
class XLinearParams(ParamBundle):
    """Weights of one X-Linear attention block (all stored out × in)."""

    w_k: Tensor    # D_B × D_k
    w_qk: Tensor   # D_B × D_q
    w_bk: Tensor   # D_c × D_B
    w_b: Tensor    # 1 × D_c
    w_e: Tensor    # D_B × D_c
    w_v: Tensor    # D_B × D_v
    w_qv: Tensor   # D_B × D_q
    activation: Activation = Activation.CELU_PLUS_ONE

    @classmethod
    def create(
        cls,
        rng: np.random.Generator,
        query_dim: int,
        key_dim: int,
        value_dim: int,
        bilinear_dim: int,
        channel_dim: int,
        activation: Activation = Activation.CELU_PLUS_ONE,
    ) -> "XLinearParams":
        return cls(
            w_k=uniform_init(rng, bilinear_dim, key_dim),
            w_qk=uniform_init(rng, bilinear_dim, query_dim),
            w_bk=uniform_init(rng, channel_dim, bilinear_dim),
            w_b=uniform_init(rng, 1, channel_dim),
            w_e=uniform_init(rng, bilinear_dim, channel_dim),
            w_v=uniform_init(rng, bilinear_dim, value_dim),
            w_qv=uniform_init(rng, bilinear_dim, query_dim),
            activation=Activation(activation),
        )

    @property
    def bilinear_dim(self) -> int:
        return self.w_k.shape[0]

    @property
    def channel_dim(self) -> int:
        return self.w_bk.shape[0]

    @property
    def query_dim(self) -> int:
        return self.w_qk.shape[1]


@dataclass
class ConvAttnParams(ParamBundle):
    """Weights of the conventional additive attention module."""

    w_a: Tensor  # 1 × D_h
    w_k: Tensor  # D_h × D_k
    w_q: Tensor  # D_h × D_q

    @classmethod
    def create(
        cls, rng: np.random.Generator, query_dim: int, key_dim: int, hidden_dim: int
    ) -> "ConvAttnParams":
        return cls(
            w_a=uniform_init(rng, 1, hidden_dim),
            w_k=uniform_init(rng, hidden_dim, key_dim),
            w_q=uniform_init(rng, hidden_dim, query_dim),
        )


@dataclass
class KVUpdateParams(ParamBundle):
    """Weights of the key/value refresh that follows each X-Linear block."""

    w_km: Tensor        # D_k × (D_B + D_k)
    w_vm: Tensor        # D_v × (D_B + D_v)
    key_gain: Tensor
    key_bias: Tensor
    value_gain: Tensor
    value_bias: Tensor

    @classmethod
    def create(
        cls, rng: np.random.Generator, bilinear_dim: int, key_dim: int, value_dim: int
    ) -> "KVUpdateParams":
        return cls(
            w_km=uniform_init(rng, key_dim, bilinear_dim + key_dim),
            w_vm=uniform_init(rng, value_dim, bilinear_dim + value_dim),
            key_gain=ones_init(key_dim),
            key_bias=zeros_init(key_dim),
            value_gain=ones_init(value_dim),
            value_bias=zeros_init(value_dim),
        )
