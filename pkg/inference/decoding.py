"""
Caption generation: greedy decoding and beam search.

Both decoders read next-word distributions from
``CaptionModel.step_log_probs`` (PAD and BOS never emitted) and run without
building a gradient graph.

Beam search keeps ``beam`` active hypotheses. At each step all expansions
are ordered by (−cumulative log-prob, token sequence); walking that order,
expansions ending in EOS retire to the finished pool and the first ``beam``
others stay active. Search stops once the pool holds ``beam`` hypotheses or
``max_len`` steps have run, in which case the surviving actives join the
pool. The pool is ranked by mean log-prob per generated token (EOS included)
with ties broken by the token sequence.
"""

from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from autograd import ContractError, Tensor, no_grad
from model.attention import AttentionTrace
from model.captioner import EOS_ID, BOS_ID, CaptionModel
from model.decoder import DecoderState
from model.encoder import EncoderOutput


# ============================================================================
# Data Models
# ============================================================================

class Caption(NamedTuple):
    """Generated word ids (BOS/EOS stripped) and their mean log-prob."""
    tokens: List[int]
    score: float
    traces: Optional[List[AttentionTrace]] = None
    finished: bool = True    # False when cut at max_len without EOS


class Beam(NamedTuple):
    """One hypothesis under expansion."""
    tokens: Tuple[int, ...]   # generated ids, EOS included when finished
    log_prob: float           # cumulative
    state_index: int          # row of the batched decoder state
    finished: bool = False

    @property
    def mean_log_prob(self) -> float:
        return self.log_prob / max(len(self.tokens), 1)

    def to_caption(self) -> Caption:
        words = list(self.tokens[:-1]) if self.finished else list(self.tokens)
        return Caption(words, self.mean_log_prob, None, self.finished)


def _check_max_len(max_len: int) -> None:
    if max_len < 1:
        raise ContractError(f"max_len must be >= 1, got {max_len}")


# ============================================================================
# Encoder output helpers
# ============================================================================

def select_encoding(enc: EncoderOutput, index: int) -> EncoderOutput:
    """Single-image view of a batched encoder output (detached)."""
    return EncoderOutput(
        v_hats=[Tensor(v.numpy()[index]) for v in enc.v_hats],
        regions=Tensor(enc.regions.numpy()[index]),
    )


def expand_encoding(enc: EncoderOutput, count: int) -> EncoderOutput:
    """Repeat a single-image encoder output along a new leading axis (detached)."""
    def tile(t: Tensor) -> Tensor:
        return Tensor(np.repeat(t.numpy()[None], count, axis=0))

    return EncoderOutput(v_hats=[tile(v) for v in enc.v_hats], regions=tile(enc.regions))


def _gather_state(state: DecoderState, rows: Sequence[int]) -> DecoderState:
    rows = np.asarray(rows, dtype=np.int64)
    return DecoderState(
        Tensor(state.h.numpy()[rows]),
        Tensor(state.cell.numpy()[rows]),
        Tensor(state.context.numpy()[rows]),
        state.step,
    )


# ============================================================================
# Greedy decoding
# ============================================================================

def greedy_decode(
    model: CaptionModel, enc: EncoderOutput, max_len: int, keep_trace: bool = False
) -> Caption:
    """
    Emit the most probable word at each step until EOS or ``max_len`` words.

    Ties go to the lowest word id. With ``keep_trace`` the caption carries one
    attention trace per decode step (the EOS step included).
    """
    _check_max_len(max_len)
    tokens: List[int] = []
    traces: List[AttentionTrace] = []
    total = 0.0
    finished = False
    with no_grad():
        state = model.init_state()
        global_feature = model.global_feature(enc)
        token = BOS_ID
        for _ in range(max_len):
            log_probs, state, trace = model.step_log_probs(state, token, enc, global_feature, keep_trace)
            row = log_probs.numpy()
            token = int(np.argmax(row))
            total += float(row[token])
            if keep_trace:
                traces.append(trace)
            if token == EOS_ID:
                finished = True
                break
            tokens.append(token)
    steps = len(tokens) + int(finished)
    return Caption(tokens, total / steps, traces if keep_trace else None, finished)


def greedy_decode_batch(model: CaptionModel, enc: EncoderOutput, max_len: int) -> List[Caption]:
    """
    Greedy decoding of a batched encoder output (leading batch axis).

    Items that reached EOS keep stepping on EOS; their later words are ignored.
    """
    _check_max_len(max_len)
    batch = enc.regions.shape[0]
    tokens: List[List[int]] = [[] for _ in range(batch)]
    totals = np.zeros(batch)
    done = np.zeros(batch, dtype=bool)
    with no_grad():
        state = model.init_state((batch,))
        global_feature = model.global_feature(enc)
        current = np.full(batch, BOS_ID, dtype=np.int64)
        for _ in range(max_len):
            log_probs, state, _ = model.step_log_probs(state, current, enc, global_feature)
            rows = log_probs.numpy()
            chosen = np.argmax(rows, axis=-1)
            for i in np.flatnonzero(~done):
                totals[i] += rows[i, chosen[i]]
                if chosen[i] == EOS_ID:
                    done[i] = True
                else:
                    tokens[i].append(int(chosen[i]))
            current = np.where(done, EOS_ID, chosen)
            if done.all():
                break
    return [
        Caption(tokens[i], float(totals[i]) / (len(tokens[i]) + int(done[i])), None, bool(done[i]))
        for i in range(batch)
    ]


# ============================================================================
# Beam search
# ============================================================================

def _rank(pool: List[Beam]) -> List[Beam]:
    return sorted(pool, key=lambda b: (-b.mean_log_prob, b.tokens))


def beam_search(model: CaptionModel, enc: EncoderOutput, beam: int, max_len: int) -> List[Caption]:
    """
    Length-capped beam search with pool retirement of finished hypotheses.

    Args:
        model: Captioning model
        enc: Encoder output of a single image
        beam: Number of active hypotheses (>= 1)
        max_len: Maximum number of decode steps

    Returns:
        At most ``beam`` captions, best first (non-increasing score)

    Raises:
        ContractError: If ``beam`` < 1 or ``max_len`` < 1
    """
    if beam < 1:
        raise ContractError(f"beam must be >= 1, got {beam}")
    _check_max_len(max_len)

    pool: List[Beam] = []
    active = [Beam((), 0.0, 0)]
    with no_grad():
        state = model.init_state((1,))
        tiled = expand_encoding(enc, 1)
        global_feature = model.global_feature(tiled)
        for _ in range(max_len):
            last = np.array([b.tokens[-1] if b.tokens else BOS_ID for b in active], dtype=np.int64)
            log_probs, state, _ = model.step_log_probs(state, last, tiled, global_feature)
            rows = log_probs.numpy()

            expansions = []
            for parent, hyp in enumerate(active):
                for word in np.flatnonzero(np.isfinite(rows[parent])):
                    word = int(word)
                    expansions.append(Beam(hyp.tokens + (word,), hyp.log_prob + float(rows[parent, word]), parent))
            expansions.sort(key=lambda b: (-b.log_prob, b.tokens))

            survivors: List[Beam] = []
            for cand in expansions:
                if len(survivors) == beam:
                    break
                if cand.tokens[-1] == EOS_ID:
                    pool.append(cand._replace(finished=True))
                else:
                    survivors.append(cand)

            active = [b._replace(state_index=row) for row, b in enumerate(survivors)]
            if len(pool) >= beam or not active:
                break
            state = _gather_state(state, [b.state_index for b in survivors])
            tiled = expand_encoding(enc, len(active))
            global_feature = model.global_feature(tiled)
        else:
            pool.extend(active)

    return [b.to_caption() for b in _rank(pool)[:beam]]
