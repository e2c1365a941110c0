"""
Training Loop Module

Two-phase training of the captioning model: word-level cross-entropy with
the warmup schedule, then self-critical training with a constant learning
rate.

Key responsibilities:
  - Hold the full training state (model, optimizer, step, sampling generator)
  - Run deterministic steps: batch order, sampling and initialisation all
    derive from the configured seed
  - Evaluate periodically and write checkpoints
  - Convert the state to and from checkpoints so resumed runs continue
    bit-identically
  - Write the step,phase,loss,lr,metric CSV log
"""

import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, List, NamedTuple, Optional, Sequence, Union

import numpy as np
import pandas as pd

from autograd import ContractError, backward
from data_service.checkpoint import Checkpoint, check_shapes, load_checkpoint, save_checkpoint
from data_service.dataset import CaptionExample, batch_for_step
from data_service.vocab import Vocabulary, build_vocab
from model.captioner import CaptionModel
from model.config import ModelConfig

from .evaluation import evaluate
from .losses import cross_entropy_loss
from .optim import AdamState, adam_step, clip_gradients, global_grad_norm, noam_lr
from .run_logger import (
    SEVERITY_ERROR,
    RunSession,
    log_checkpoint,
    log_numeric_issue,
    log_progress,
)
from .scst import RewardFn, bleu_reward, scst_loss


PHASE_CE = "ce"
PHASE_SCST = "scst"
PHASES = (PHASE_CE, PHASE_SCST)
SCST_STREAM = 1
HISTORY_COLUMNS = ["step", "phase", "loss", "lr", "metric"]

PathLike = Union[str, Path]


# ============================================================================
# Data Models
# ============================================================================

@dataclass(frozen=True)
class TrainConfig:
    """Training hyperparameters; defaults are desk scale."""

    batch_size: int = 16
    warmup: int = 200
    ce_max_steps: int = 2000
    ce_max_epochs: int = 70
    scst_lr: float = 1e-5
    scst_max_steps: int = 500
    scst_max_epochs: int = 35
    beam: int = 3
    clip_norm: float = 5.0
    seed: int = 0
    eval_every: int = 100
    eval_examples: int = 100
    checkpoint_every: int = 0     # 0: only at the end of a run

    def __post_init__(self):
        if self.warmup < 1:
            raise ContractError(f"warmup must be >= 1, got {self.warmup}")
        if self.scst_lr <= 0 or self.clip_norm <= 0:
            raise ContractError("scst_lr and clip_norm must be positive")
        if self.batch_size < 1 or self.beam < 1:
            raise ContractError("batch_size and beam must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)


class HistoryRecord(NamedTuple):
    step: int                  # 1-based step within the phase
    phase: str
    loss: float
    lr: float
    metric: Optional[float]    # held-out BLEU-4 on evaluation steps


# ============================================================================
# Training state
# ============================================================================

class TrainingRun:
    """Everything needed to continue training exactly where it stopped."""

    def __init__(
        self,
        model: CaptionModel,
        vocab: Vocabulary,
        config: TrainConfig,
        phase: str = PHASE_CE,
        session: Optional[RunSession] = None,
        reward_fn: RewardFn = bleu_reward,
    ):
        if phase not in PHASES:
            raise ContractError(f"phase must be one of {PHASES}, got {phase!r}")
        if len(vocab) != model.config.vocab_size:
            raise ContractError(f"vocabulary has {len(vocab)} words, model expects {model.config.vocab_size}")
        self.model = model
        self.vocab = vocab
        self.config = config
        self.phase = phase
        self.session = session
        self.reward_fn = reward_fn
        self.params = model.parameter_dict()
        self.optimizer = AdamState.create(self.params)
        self.step = 0
        self.rng = np.random.default_rng([config.seed, SCST_STREAM])

    def start_phase(self, phase: str) -> None:
        """Switch phase: fresh optimizer, step counter and sampling generator."""
        if phase not in PHASES:
            raise ContractError(f"phase must be one of {PHASES}, got {phase!r}")
        self.phase = phase
        self.step = 0
        self.optimizer = AdamState.create(self.params)
        self.rng = np.random.default_rng([self.config.seed, SCST_STREAM])

    # ------------------------------------------------------------------
    # Budgets and schedule
    # ------------------------------------------------------------------

    def step_budget(self, dataset_size: int) -> int:
        per_epoch = math.ceil(dataset_size / self.config.batch_size)
        if self.phase == PHASE_CE:
            return min(self.config.ce_max_steps, self.config.ce_max_epochs * per_epoch)
        return min(self.config.scst_max_steps, self.config.scst_max_epochs * per_epoch)

    def learning_rate(self) -> float:
        if self.phase == PHASE_CE:
            return noam_lr(self.step + 1, self.model.config.hidden_dim, self.config.warmup)
        return self.config.scst_lr

    # ------------------------------------------------------------------
    # Steps
    # ------------------------------------------------------------------

    def train_step(self, train: Sequence[CaptionExample]) -> HistoryRecord:
        """Run one optimisation step on the batch scheduled for the current step."""
        max_len = self.model.config.max_caption_len
        batch = batch_for_step(train, self.vocab, self.config.batch_size, self.config.seed, self.step, max_len)
        self.model.zero_grad()

        if self.phase == PHASE_CE:
            enc = self.model.encode(batch.regions)
            logits = self.model.teacher_forced_logits(enc, batch.input_ids)
            loss = cross_entropy_loss(logits, batch.target_ids, batch.mask)
        else:
            loss, _ = scst_loss(self.model, batch, self.reward_fn, self.rng, max_len)

        value = loss.item()
        if not math.isfinite(value):
            log_numeric_issue(self.session, "non-finite loss", self.step + 1, value, SEVERITY_ERROR)
            raise ContractError(f"non-finite loss at {self.phase} step {self.step + 1}: {value}")

        lr = self.learning_rate()
        backward(loss)
        norm = global_grad_norm(self.params.values())
        scale = clip_gradients(self.params.values(), self.config.clip_norm)
        if scale < 1.0:
            log_numeric_issue(self.session, "gradient clipped", self.step + 1, f"norm {norm:.4g}")
        adam_step(self.optimizer, self.params, None, lr)
        self.step += 1
        return HistoryRecord(self.step, self.phase, value, lr, None)

    def run(
        self,
        train: Sequence[CaptionExample],
        val: Optional[Sequence[CaptionExample]] = None,
        steps: Optional[int] = None,
        checkpoint_path: Optional[PathLike] = None,
    ) -> List[HistoryRecord]:
        """
        Train until the phase budget is spent or ``steps`` more steps have run.

        Args:
            train: Training examples
            val: Held-out examples for the periodic BLEU metric (optional)
            steps: Cap on the number of steps taken by this call
            checkpoint_path: Where to write periodic and final checkpoints

        Returns:
            History records of the steps taken by this call

        Raises:
            ContractError: If ``train`` is empty
        """
        if not train:
            raise ContractError("training needs a non-empty dataset")
        budget = self.step_budget(len(train))
        end = budget if steps is None else min(budget, self.step + steps)
        history: List[HistoryRecord] = []

        while self.step < end:
            record = self.train_step(train)
            at_eval = self.config.eval_every and record.step % self.config.eval_every == 0
            if val and (at_eval or record.step == budget):
                subset = list(val)[: self.config.eval_examples]
                record = record._replace(metric=evaluate(self.model, subset, self.vocab, batch_size=self.config.batch_size).bleu)
                log_progress(self.session, f"{self.phase} loss {record.loss:.4f} bleu {record.metric:.4f}", record.step)
            history.append(record)
            if checkpoint_path and self.config.checkpoint_every and record.step % self.config.checkpoint_every == 0:
                self.save(checkpoint_path)

        if checkpoint_path and history:
            self.save(checkpoint_path)
        return history

    # ------------------------------------------------------------------
    # Checkpoints
    # ------------------------------------------------------------------

    def to_checkpoint(self) -> Checkpoint:
        return Checkpoint(
            model_config=self.model.config.to_dict(),
            parameters={name: t.data.copy() for name, t in self.params.items()},
            train_config=self.config.to_dict(),
            vocab=list(self.vocab.id_to_token),
            optimizer_step=self.optimizer.step,
            moment1={k: v.copy() for k, v in self.optimizer.moment1.items()},
            moment2={k: v.copy() for k, v in self.optimizer.moment2.items()},
            step=self.step,
            phase=self.phase,
            seed=self.config.seed,
            rng_state=self.rng.bit_generator.state,
        )

    def save(self, path: PathLike) -> None:
        save_checkpoint(path, self.to_checkpoint())
        log_checkpoint(self.session, path, self.step)

    @classmethod
    def from_checkpoint(
        cls,
        ckpt: Checkpoint,
        config: Optional[TrainConfig] = None,
        session: Optional[RunSession] = None,
    ) -> "TrainingRun":
        """
        Rebuild a run from ``ckpt``; ``config`` overrides the stored train config.

        Raises:
            CheckpointError: If the stored parameters do not fit the stored model config
        """
        model = model_from_checkpoint(ckpt)
        vocab = Vocabulary(ckpt.vocab)
        config = config or TrainConfig(**ckpt.train_config)
        run = cls(model, vocab, config, ckpt.phase, session)
        run.step = ckpt.step
        run.optimizer = AdamState(
            moment1={k: v.copy() for k, v in ckpt.moment1.items()},
            moment2={k: v.copy() for k, v in ckpt.moment2.items()},
            step=ckpt.optimizer_step,
        )
        if ckpt.rng_state is not None:
            run.rng.bit_generator.state = ckpt.rng_state
        return run


def model_from_checkpoint(ckpt: Checkpoint, path: Optional[PathLike] = None) -> CaptionModel:
    """Instantiate the stored config and copy the stored parameters in."""
    model = CaptionModel.create(ModelConfig(**ckpt.model_config))
    check_shapes(ckpt.parameters, model.parameter_shapes(), path)
    for name, tensor in model.named_parameters():
        tensor.data = np.array(ckpt.parameters[name], dtype=np.float64)
    return model


def load_model(path: PathLike) -> CaptionModel:
    return model_from_checkpoint(load_checkpoint(path), path)


# ============================================================================
# Public entry points
# ============================================================================

def train_loop(
    model: CaptionModel,
    dataset: Sequence[CaptionExample],
    config: TrainConfig,
    phase: str = PHASE_CE,
    vocab: Optional[Vocabulary] = None,
    val: Optional[Sequence[CaptionExample]] = None,
    steps: Optional[int] = None,
    session: Optional[RunSession] = None,
) -> List[HistoryRecord]:
    """
    Train ``model`` in place for one phase and return its history.

    ``vocab`` defaults to a vocabulary built from ``dataset`` with the
    threshold at 1.

    Raises:
        ContractError: If ``dataset`` is empty
    """
    if not dataset:
        raise ContractError("training needs a non-empty dataset")
    if vocab is None:
        vocab = build_vocab([ex.caption for ex in dataset], min_count=1)
    run = TrainingRun(model, vocab, config, phase, session)
    return run.run(dataset, val, steps)


def history_frame(history: Iterable[HistoryRecord]) -> pd.DataFrame:
    return pd.DataFrame([r._asdict() for r in history], columns=HISTORY_COLUMNS)


def write_history_csv(history: Iterable[HistoryRecord], path: PathLike, append: bool = False) -> None:
    """Write (or append) the training log; the metric is blank on non-evaluation steps."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = history_frame(history)
    append = append and path.exists()
    frame.to_csv(path, mode="a" if append else "w", header=not append, index=False, na_rep="")
