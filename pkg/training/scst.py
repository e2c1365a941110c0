"""
Self-critical sequence training.

For every image a caption is sampled word by word from the model and a
greedy caption is decoded as the baseline. The loss of the batch is

    mean_i  −(r(sample_i) − r(greedy_i)) · Σ_t log p(sampled word_t)

where the sum runs over the sampled words up to and including EOS. The
greedy baseline is decoded without a graph, so gradients flow only through
the sampled log-probabilities.
"""

from typing import Callable, List, NamedTuple, Optional, Sequence

import numpy as np

from autograd import ContractError, Tensor
from data_service.dataset import CaptionBatch
from inference.decoding import greedy_decode_batch
from inference.metrics import bleu_smooth
from model.captioner import BOS_ID, EOS_ID, CaptionModel


RewardFn = Callable[[Sequence[int], Sequence[Sequence[int]]], float]


class ScstReport(NamedTuple):
    """What one SCST loss evaluation sampled and scored."""
    samples: List[List[int]]          # sampled word ids, EOS stripped
    baselines: List[List[int]]        # greedy word ids, EOS stripped
    sample_rewards: np.ndarray
    baseline_rewards: np.ndarray
    advantages: np.ndarray
    sample_log_probs: np.ndarray      # Σ_t log p per item


def bleu_reward(candidate: Sequence[int], references: Sequence[Sequence[int]]) -> float:
    """Default reward: sentence-level smoothed BLEU-4."""
    return bleu_smooth(candidate, references)


def sample_words(log_probs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """
    Draw one word per row by inverse-CDF sampling at temperature 1.

    Zero-probability words (PAD, BOS) are never drawn.
    """
    probs = np.exp(log_probs)
    cdf = np.cumsum(probs, axis=-1)
    targets = rng.random(probs.shape[0]) * cdf[:, -1]
    chosen = (cdf <= targets[:, None]).sum(axis=-1)
    return np.minimum(chosen, probs.shape[-1] - 1)


def sample_captions(
    model: CaptionModel, enc, max_len: int, rng: np.random.Generator
):
    """
    Sample one caption per image of a batched encoder output.

    Returns:
        Tuple of (list of word-id lists with EOS stripped, Σ_t log p tensor (B,))
    """
    batch = enc.regions.shape[0]
    state = model.init_state((batch,))
    global_feature = model.global_feature(enc)
    current = np.full(batch, BOS_ID, dtype=np.int64)
    done = np.zeros(batch, dtype=bool)
    words: List[List[int]] = [[] for _ in range(batch)]
    total: Optional[Tensor] = None
    rows = np.arange(batch)

    for _ in range(max_len):
        log_probs, state, _ = model.step_log_probs(state, current, enc, global_feature)
        chosen = sample_words(log_probs.numpy(), rng)
        alive = (~done).astype(np.float64)
        picked = log_probs[rows, chosen] * alive
        total = picked if total is None else total + picked
        for i in np.flatnonzero(~done):
            if chosen[i] == EOS_ID:
                done[i] = True
            else:
                words[i].append(int(chosen[i]))
        current = np.where(done, EOS_ID, chosen)
        if done.all():
            break
    return words, total


def scst_loss(
    model: CaptionModel,
    batch: CaptionBatch,
    reward_fn: RewardFn = bleu_reward,
    rng: Optional[np.random.Generator] = None,
    max_len: Optional[int] = None,
):
    """
    Self-critical loss of ``batch`` with a greedy baseline.

    Args:
        model: Captioning model
        batch: Batch whose ``references`` are the target word ids
        reward_fn: Maps (candidate ids, list of reference id lists) to a real
        rng: Sampling generator (seeded from 0 when omitted)
        max_len: Decode cap; defaults to the model config

    Returns:
        Tuple of (scalar loss tensor, ScstReport)

    Raises:
        ContractError: If ``max_len`` < 1
        Exception: Whatever ``reward_fn`` raises
    """
    if max_len is None:
        max_len = model.config.max_caption_len
    if max_len < 1:
        raise ContractError(f"max_len must be >= 1, got {max_len}")
    rng = rng if rng is not None else np.random.default_rng(0)

    enc = model.encode(batch.regions)
    samples, log_prob_sums = sample_captions(model, enc, max_len, rng)
    baselines = [c.tokens for c in greedy_decode_batch(model, enc, max_len)]

    sample_rewards = np.array([float(reward_fn(s, [ref])) for s, ref in zip(samples, batch.references)])
    baseline_rewards = np.array([float(reward_fn(g, [ref])) for g, ref in zip(baselines, batch.references)])
    advantages = sample_rewards - baseline_rewards

    loss = (log_prob_sums * (-advantages)).mean()
    report = ScstReport(samples, baselines, sample_rewards, baseline_rewards, advantages, log_prob_sums.numpy().copy())
    return loss, report
