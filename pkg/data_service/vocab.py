"""
Vocabulary construction.

Tokens are lower-cased and counted; tokens seen at least ``min_count`` times
get ids after the four reserved ones, ordered by descending count and then
lexicographically. Everything else maps to UNK.
"""

from collections import Counter
from typing import Dict, Iterable, List, Sequence

from autograd import ContractError
from model.captioner import BOS_ID, EOS_ID, PAD_ID, UNK_ID


PAD = "<pad>"
BOS = "<bos>"
EOS = "<eos>"
UNK = "<unk>"
RESERVED_TOKENS = (PAD, BOS, EOS, UNK)
DEFAULT_MIN_COUNT = 6


class Vocabulary:
    """Bijective token ↔ id map with reserved ids 0–3 = PAD/BOS/EOS/UNK."""

    def __init__(self, tokens: Sequence[str], min_count: int = DEFAULT_MIN_COUNT):
        if tuple(tokens[:len(RESERVED_TOKENS)]) != RESERVED_TOKENS:
            raise ContractError(f"vocabulary must start with {RESERVED_TOKENS}")
        if len(set(tokens)) != len(tokens):
            raise ContractError("vocabulary tokens must be unique")
        self.id_to_token: List[str] = list(tokens)
        self.token_to_id: Dict[str, int] = {tok: i for i, tok in enumerate(self.id_to_token)}
        self.min_count = min_count

    def __len__(self) -> int:
        return len(self.id_to_token)

    def __contains__(self, token: str) -> bool:
        return token.lower() in self.token_to_id

    def encode(self, tokens: Iterable[str]) -> List[int]:
        return [self.token_to_id.get(tok.lower(), UNK_ID) for tok in tokens]

    def decode(self, ids: Iterable[int], strip_special: bool = True) -> List[str]:
        words = []
        for i in ids:
            i = int(i)
            if strip_special and i in (PAD_ID, BOS_ID, EOS_ID):
                continue
            words.append(self.id_to_token[i])
        return words

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocabulary) and self.id_to_token == other.id_to_token

    def __repr__(self) -> str:
        return f"Vocabulary(size={len(self)}, min_count={self.min_count})"


def build_vocab(corpus: Sequence[Sequence[str]], min_count: int = DEFAULT_MIN_COUNT) -> Vocabulary:
    """
    Build a vocabulary from tokenised sentences.

    Args:
        corpus: List of token lists
        min_count: Minimum occurrences for a token to get its own id

    Returns:
        Vocabulary with deterministic id assignment

    Raises:
        ContractError: If the corpus is empty
    """
    if not corpus:
        raise ContractError("build_vocab needs a non-empty corpus")
    counts = Counter(tok.lower() for sentence in corpus for tok in sentence)
    for reserved in RESERVED_TOKENS:
        counts.pop(reserved, None)
    kept = sorted(
        (tok for tok, n in counts.items() if n >= min_count),
        key=lambda tok: (-counts[tok], tok),
    )
    return Vocabulary(list(RESERVED_TOKENS) + kept, min_count=min_count)
