"""
Sentence-level smoothed BLEU for desk-scale evaluation and the SCST reward.
"""

import math
from collections import Counter
from typing import Hashable, List, Sequence

from autograd import ContractError


DEFAULT_MAX_N = 4


def _ngrams(tokens: Sequence[Hashable], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def _closest_ref_length(candidate_len: int, references: Sequence[Sequence[Hashable]]) -> int:
    # shorter reference wins a tie
    return min((len(ref) for ref in references), key=lambda r: (abs(r - candidate_len), r))


def bleu_smooth(
    candidate: Sequence[Hashable], references: Sequence[Sequence[Hashable]], max_n: int = DEFAULT_MAX_N
) -> float:
    """
    Geometric mean of modified n-gram precisions times the brevity penalty
    against the closest reference length.

    Unigram precision is unsmoothed and a candidate sharing no word with any
    reference scores 0. Orders 2..k are add-one smoothed as
    (matches + 1) / (candidate n-grams + 1), where k = min(max_n, len(candidate)).

    Returns:
        Score in [0, 1]; 0.0 for an empty candidate

    Raises:
        ContractError: If ``references`` is empty or ``max_n`` < 1
    """
    if not references:
        raise ContractError("bleu_smooth needs at least one reference")
    if max_n < 1:
        raise ContractError(f"max_n must be >= 1, got {max_n}")
    if not candidate:
        return 0.0

    candidate = list(candidate)
    orders = min(max_n, len(candidate))
    log_precision = 0.0
    for n in range(1, orders + 1):
        counts = _ngrams(candidate, n)
        max_ref = Counter()
        for ref in references:
            for gram, count in _ngrams(list(ref), n).items():
                max_ref[gram] = max(max_ref[gram], count)
        matches = sum(min(count, max_ref[gram]) for gram, count in counts.items())
        total = sum(counts.values())
        if n == 1:
            if matches == 0:
                return 0.0
            log_precision += math.log(matches / total)
        else:
            log_precision += math.log((matches + 1) / (total + 1))

    c = len(candidate)
    r = _closest_ref_length(c, references)
    brevity = 1.0 if c > r else math.exp(1.0 - r / c)
    return brevity * math.exp(log_precision / orders)


def mean_bleu(candidates: Sequence[Sequence[Hashable]], references: Sequence[Sequence[Sequence[Hashable]]]) -> float:
    """Average sentence-level smoothed BLEU-4 over paired candidates/reference lists."""
    if len(candidates) != len(references):
        raise ContractError(f"{len(candidates)} candidates but {len(references)} reference lists")
    if not candidates:
        return 0.0
    scores: List[float] = [bleu_smooth(c, refs) for c, refs in zip(candidates, references)]
    return sum(scores) / len(scores)
