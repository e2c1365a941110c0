"""
Held-out evaluation: teacher-forced cross-entropy and smoothed BLEU-4 of
generated captions.
"""

from typing import List, NamedTuple, Optional, Sequence

from autograd import ContractError, no_grad
from data_service.dataset import CaptionExample, iterate_batches
from data_service.vocab import Vocabulary
from inference.decoding import Caption, beam_search, greedy_decode_batch, select_encoding
from inference.metrics import mean_bleu
from model.captioner import CaptionModel

from .losses import cross_entropy_loss


class EvalReport(NamedTuple):
    bleu: float
    cross_entropy: float
    count: int
    captions: List[Caption]


def evaluate(
    model: CaptionModel,
    examples: Sequence[CaptionExample],
    vocab: Vocabulary,
    max_len: Optional[int] = None,
    beam: int = 1,
    batch_size: int = 32,
) -> EvalReport:
    """
    Score ``model`` on ``examples``.

    Captions come from greedy decoding (``beam`` = 1) or beam search; BLEU is
    averaged over examples and CE over examples' per-sequence losses.

    Raises:
        ContractError: If ``examples`` is empty
    """
    if not examples:
        raise ContractError("evaluate needs at least one example")
    if max_len is None:
        max_len = model.config.max_caption_len
    if max_len < 1:
        raise ContractError(f"max_len must be >= 1, got {max_len}")
    captions: List[Caption] = []
    references: List[List[List[int]]] = []
    ce_total = 0.0
    with no_grad():
        for batch in iterate_batches(examples, vocab, batch_size, max_len):
            enc = model.encode(batch.regions)
            logits = model.teacher_forced_logits(enc, batch.input_ids)
            ce_total += cross_entropy_loss(logits, batch.target_ids, batch.mask).item() * batch.size
            if beam == 1:
                captions.extend(greedy_decode_batch(model, enc, max_len))
            else:
                captions.extend(
                    beam_search(model, select_encoding(enc, i), beam, max_len)[0] for i in range(batch.size)
                )
            references.extend([ref] for ref in batch.references)
    bleu = mean_bleu([c.tokens for c in captions], references)
    return EvalReport(bleu, ce_total / len(examples), len(examples), captions)
