"""
Inference Package

Greedy decoding, beam search and the smoothed BLEU metric.
"""

from .decoding import (
    Beam,
    Caption,
    beam_search,
    expand_encoding,
    greedy_decode,
    greedy_decode_batch,
    select_encoding,
)
from .metrics import DEFAULT_MAX_N, bleu_smooth, mean_bleu

__all__ = [
    "Beam",
    "Caption",
    "beam_search",
    "expand_encoding",
    "greedy_decode",
    "greedy_decode_batch",
    "select_encoding",
    "DEFAULT_MAX_N",
    "bleu_smooth",
    "mean_bleu",
]
