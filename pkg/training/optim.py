"""
Optimisation: Adam, the warmup-then-decay learning-rate schedule and
global-norm gradient clipping.
"""

import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, Mapping, Optional

import numpy as np

from autograd import ContractError, DimensionError, Tensor


ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass
class AdamState:
    """Per-parameter first/second moments and the shared step counter."""
    moment1: Dict[str, np.ndarray] = field(default_factory=dict)
    moment2: Dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    eps: float = ADAM_EPS

    @classmethod
    def create(cls, params: Mapping[str, Tensor]) -> "AdamState":
        return cls(
            moment1={name: np.zeros_like(t.data) for name, t in params.items()},
            moment2={name: np.zeros_like(t.data) for name, t in params.items()},
        )


def adam_step(
    state: AdamState,
    params: Mapping[str, Tensor],
    grads: Optional[Mapping[str, np.ndarray]],
    lr: float,
) -> None:
    """
    Apply one bias-corrected Adam update in place.

    Args:
        state: Moments and step counter (updated in place)
        params: Named parameters
        grads: Named gradients; None reads each parameter's ``grad``
        lr: Learning rate

    Parameters without a gradient are left untouched and keep their moments.

    Raises:
        DimensionError: If a moment or gradient shape differs from its parameter
        ContractError: If ``lr`` is not positive
    """
    if lr <= 0:
        raise ContractError(f"learning rate must be positive, got {lr}")
    state.step += 1
    correction1 = 1.0 - state.beta1 ** state.step
    correction2 = 1.0 - state.beta2 ** state.step

    for name, param in params.items():
        grad = param.grad if grads is None else grads.get(name)
        if grad is None:
            continue
        m = state.moment1.setdefault(name, np.zeros_like(param.data))
        v = state.moment2.setdefault(name, np.zeros_like(param.data))
        if m.shape != param.shape or np.shape(grad) != param.shape:
            raise DimensionError(f"Adam shapes for {name}", param.shape, m.shape, np.shape(grad))
        m *= state.beta1
        m += (1.0 - state.beta1) * grad
        v *= state.beta2
        v += (1.0 - state.beta2) * np.square(grad)
        m_hat = m / correction1
        v_hat = v / correction2
        param.data -= lr * m_hat / (np.sqrt(v_hat) + state.eps)


def noam_lr(step: int, model_dim: int, warmup: int) -> float:
    """
    model_dim^-0.5 · min(step^-0.5, step · warmup^-1.5).

    Raises:
        ContractError: If ``step`` < 1 or ``warmup`` < 1
    """
    if step < 1:
        raise ContractError(f"noam_lr needs step >= 1, got {step}")
    if warmup < 1:
        raise ContractError(f"warmup must be >= 1, got {warmup}")
    return model_dim ** -0.5 * min(step ** -0.5, step * warmup ** -1.5)


def global_grad_norm(params: Iterable[Tensor]) -> float:
    total = 0.0
    for p in params:
        if p.grad is not None:
            total += float(np.sum(np.square(p.grad)))
    return math.sqrt(total)


def clip_gradients(params: Iterable[Tensor], max_norm: float) -> float:
    """
    Rescale all gradients so their global L2 norm is at most ``max_norm``.

    Returns:
        The scale applied (1.0 when already under the threshold)

    Raises:
        ContractError: If ``max_norm`` is not positive
    """
    if max_norm <= 0:
        raise ContractError(f"max_norm must be positive, got {max_norm}")
    params = list(params)
    norm = global_grad_norm(params)
    if norm <= max_norm:
        return 1.0
    scale = max_norm / norm
    for p in params:
        if p.grad is not None:
            p.grad = p.grad * scale
    return scale
