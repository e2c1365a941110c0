"""
Word-level cross-entropy under teacher forcing.
"""

from typing import Optional

import numpy as np

from autograd import ContractError, DimensionError, Tensor, log_softmax


def cross_entropy_loss(logits: Tensor, targets, mask: Optional[np.ndarray] = None) -> Tensor:
    """
    Masked mean of −log softmax(logits)[target].

    A single sequence takes (T, |Σ|) logits with (T,) targets and mask; a
    batch takes (B, T, |Σ|) with (B, T). Each sequence is averaged over its
    unmasked positions, then sequences are averaged, so a batch loss equals
    the mean of the per-sequence losses.

    Args:
        logits: Unnormalised scores
        targets: Integer word ids
        mask: 1.0 on positions that count (all positions when omitted)

    Returns:
        Scalar loss tensor

    Raises:
        DimensionError: If shapes disagree
        ContractError: If a target id is outside the vocabulary or a
            sequence has no unmasked position
    """
    targets = np.asarray(targets, dtype=np.int64)
    if logits.ndim not in (2, 3) or logits.shape[:-1] != targets.shape:
        raise DimensionError("logits must be (..., T, V) over (..., T) targets", logits.shape, targets.shape)
    mask = np.ones(targets.shape) if mask is None else np.asarray(mask, dtype=np.float64)
    if mask.shape != targets.shape:
        raise DimensionError("mask must match targets", mask.shape, targets.shape)

    vocab = logits.shape[-1]
    if targets.min() < 0 or targets.max() >= vocab:
        raise ContractError(f"target id out of vocabulary (size {vocab}): {targets.max()}")
    counts = mask.sum(axis=-1)
    if np.any(counts <= 0):
        raise ContractError("every sequence needs at least one unmasked position")

    log_probs = log_softmax(logits, axis=-1)
    index = tuple(np.indices(targets.shape)) + (targets,)
    nll = -log_probs[index]
    per_sequence = (nll * mask).sum(axis=-1) / counts
    return per_sequence.mean() if per_sequence.ndim else per_sequence
