"""
Ablation grid over the decoder attention module, the activation switch and
the number of encoder blocks, trained and scored on the same data.
"""

from dataclasses import replace
from typing import Callable, List, NamedTuple, Optional, Sequence

import pandas as pd

from data_service.dataset import CaptionExample
from data_service.vocab import Vocabulary
from model.captioner import CaptionModel
from model.config import MAX_ENCODER_BLOCKS, AttentionKind, ModelConfig

from .evaluation import evaluate
from .run_logger import RunSession, log_progress
from .trainer import PHASE_CE, TrainConfig, TrainingRun


ABLATION_COLUMNS = ["attention", "elu", "encoder_blocks", "final_ce", "val_ce", "toy_bleu"]


class AblationVariant(NamedTuple):
    attention: AttentionKind
    elu: Optional[bool]       # None: the switch has no effect (conventional decoder)
    encoder_blocks: int

    @property
    def elu_label(self) -> str:
        if self.elu is None:
            return "n/a"
        return "on" if self.elu else "off"

    def apply(self, base: ModelConfig) -> ModelConfig:
        return replace(
            base,
            decoder_attention=self.attention.value,
            elu=bool(self.elu),
            encoder_blocks=self.encoder_blocks,
        )


def ablation_grid(max_blocks: int = MAX_ENCODER_BLOCKS) -> List[AblationVariant]:
    """
    {conventional, xlinear} × {elu on, off} × {0..max_blocks} encoder blocks,
    with the ELU switch collapsed for the conventional decoder.
    """
    variants = [AblationVariant(AttentionKind.CONVENTIONAL, None, blocks) for blocks in range(max_blocks + 1)]
    for elu in (False, True):
        variants.extend(AblationVariant(AttentionKind.XLINEAR, elu, blocks) for blocks in range(max_blocks + 1))
    return variants


def run_ablation(
    base: ModelConfig,
    train_config: TrainConfig,
    train: Sequence[CaptionExample],
    val: Sequence[CaptionExample],
    vocab: Vocabulary,
    steps: Optional[int] = None,
    variants: Optional[Sequence[AblationVariant]] = None,
    session: Optional[RunSession] = None,
    on_variant: Optional[Callable[[AblationVariant, dict], None]] = None,
) -> pd.DataFrame:
    """
    Train every variant with CE from the same seed and tabulate the results.

    Args:
        base: Model config the variants modify
        train_config: Shared training settings
        train: Training examples
        val: Held-out examples for CE and BLEU-4
        vocab: Vocabulary matching ``base.vocab_size``
        steps: Step cap per variant (defaults to the phase budget)
        variants: Grid to run (defaults to ``ablation_grid()``)
        session: Run session collecting progress events
        on_variant: Called with each finished variant and its row

    Returns:
        One row per variant with columns attention, elu, encoder_blocks,
        final_ce (last training loss), val_ce and toy_bleu
    """
    rows = []
    for variant in variants if variants is not None else ablation_grid():
        model = CaptionModel.create(variant.apply(base), seed=train_config.seed)
        run = TrainingRun(model, vocab, train_config, PHASE_CE, session)
        history = run.run(train, steps=steps)
        report = evaluate(model, val, vocab, batch_size=train_config.batch_size)
        row = {
            "attention": variant.attention.value,
            "elu": variant.elu_label,
            "encoder_blocks": variant.encoder_blocks,
            "final_ce": history[-1].loss if history else float("nan"),
            "val_ce": report.cross_entropy,
            "toy_bleu": report.bleu,
        }
        log_progress(session, f"ablation {row['attention']}/{row['elu']}/{row['encoder_blocks']}: bleu {report.bleu:.4f}")
        if on_variant is not None:
            on_variant(variant, row)
        rows.append(row)
    return pd.DataFrame(rows, columns=ABLATION_COLUMNS)
