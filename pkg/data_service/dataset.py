"""
Caption examples and padded batches.
"""

from typing import List, NamedTuple, Sequence

import numpy as np

from autograd import ContractError, DimensionError
from model.captioner import BOS_ID, EOS_ID, PAD_ID

from .vocab import Vocabulary


class CaptionExample(NamedTuple):
    """One image: its region features and reference caption tokens."""
    example_id: str
    regions: np.ndarray          # (N, raw feature dim)
    caption: List[str]


class CaptionBatch(NamedTuple):
    """
    Padded batch for teacher forcing.

    input_ids:  [BOS, w_1, …, w_L, PAD…]
    target_ids: [w_1, …, w_L, EOS, PAD…]
    mask:       1.0 on the L+1 real target positions
    """
    example_ids: List[str]
    regions: np.ndarray          # (B, N, D)
    input_ids: np.ndarray        # (B, T)
    target_ids: np.ndarray       # (B, T)
    mask: np.ndarray             # (B, T)
    references: List[List[int]]

    @property
    def size(self) -> int:
        return len(self.example_ids)


def collate(examples: Sequence[CaptionExample], vocab: Vocabulary, max_len: int = None) -> CaptionBatch:
    """
    Stack examples into a padded batch; captions longer than ``max_len``
    words are truncated before EOS.

    Raises:
        ContractError: If ``examples`` is empty
        DimensionError: If region sets differ in shape
    """
    if not examples:
        raise ContractError("collate needs at least one example")
    shape = examples[0].regions.shape
    for ex in examples:
        if ex.regions.shape != shape:
            raise DimensionError(f"region sets in a batch must agree ({ex.example_id})", shape, ex.regions.shape)

    encoded = [vocab.encode(ex.caption) for ex in examples]
    if max_len is not None:
        encoded = [ids[:max_len] for ids in encoded]
    steps = max(len(ids) for ids in encoded) + 1
    batch = len(examples)
    input_ids = np.full((batch, steps), PAD_ID, dtype=np.int64)
    target_ids = np.full((batch, steps), PAD_ID, dtype=np.int64)
    mask = np.zeros((batch, steps))
    for row, ids in enumerate(encoded):
        input_ids[row, :len(ids) + 1] = [BOS_ID] + ids
        target_ids[row, :len(ids) + 1] = ids + [EOS_ID]
        mask[row, :len(ids) + 1] = 1.0

    return CaptionBatch(
        example_ids=[ex.example_id for ex in examples],
        regions=np.stack([np.asarray(ex.regions, dtype=np.float64) for ex in examples]),
        input_ids=input_ids,
        target_ids=target_ids,
        mask=mask,
        references=encoded,
    )


def epoch_order(size: int, seed: int, epoch: int) -> np.ndarray:
    """Shuffled example order for one epoch; a pure function of (seed, epoch)."""
    return np.random.default_rng([seed, epoch]).permutation(size)


def batch_for_step(
    examples: Sequence[CaptionExample], vocab: Vocabulary, batch_size: int, seed: int, step: int,
    max_len: int = None,
) -> CaptionBatch:
    """
    The batch consumed at global step ``step`` (0-based).

    Batches tile each epoch's shuffled order; the final batch of an epoch may
    be short. Any step can be reproduced without replaying earlier ones.
    """
    if not examples:
        raise ContractError("dataset is empty")
    per_epoch = -(-len(examples) // batch_size)
    epoch, offset = divmod(step, per_epoch)
    order = epoch_order(len(examples), seed, epoch)
    chosen = order[offset * batch_size:(offset + 1) * batch_size]
    return collate([examples[i] for i in chosen], vocab, max_len)


def iterate_batches(examples: Sequence[CaptionExample], vocab: Vocabulary, batch_size: int, max_len: int = None):
    """Unshuffled batches in dataset order, for evaluation."""
    for start in range(0, len(examples), batch_size):
        yield collate(examples[start:start + batch_size], vocab, max_len)
