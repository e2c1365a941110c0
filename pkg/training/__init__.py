"""
Training Package

Cross-entropy and self-critical training, Adam with the warmup schedule,
gradient clipping, evaluation, the ablation grid and run logging.
"""

from .losses import cross_entropy_loss
from .optim import ADAM_BETA1, ADAM_BETA2, ADAM_EPS, AdamState, adam_step, clip_gradients, global_grad_norm, noam_lr
from .scst import ScstReport, bleu_reward, sample_captions, sample_words, scst_loss
from .evaluation import EvalReport, evaluate
from .run_logger import (
    RunSession,
    format_run_report,
    get_session_events,
    log_checkpoint,
    log_config_event,
    log_io_event,
    log_numeric_issue,
    log_progress,
)
from .trainer import (
    HISTORY_COLUMNS,
    PHASE_CE,
    PHASE_SCST,
    HistoryRecord,
    TrainConfig,
    TrainingRun,
    history_frame,
    load_model,
    model_from_checkpoint,
    train_loop,
    write_history_csv,
)
from .ablation import ABLATION_COLUMNS, AblationVariant, ablation_grid, run_ablation

__all__ = [
    "cross_entropy_loss",
    "ADAM_BETA1",
    "ADAM_BETA2",
    "ADAM_EPS",
    "AdamState",
    "adam_step",
    "clip_gradients",
    "global_grad_norm",
    "noam_lr",
    "ScstReport",
    "bleu_reward",
    "sample_captions",
    "sample_words",
    "scst_loss",
    "EvalReport",
    "evaluate",
    "RunSession",
    "format_run_report",
    "get_session_events",
    "log_checkpoint",
    "log_config_event",
    "log_io_event",
    "log_numeric_issue",
    "log_progress",
    "HISTORY_COLUMNS",
    "PHASE_CE",
    "PHASE_SCST",
    "HistoryRecord",
    "TrainConfig",
    "TrainingRun",
    "history_frame",
    "load_model",
    "model_from_checkpoint",
    "train_loop",
    "write_history_csv",
    "ABLATION_COLUMNS",
    "AblationVariant",
    "ablation_grid",
    "run_ablation",
]
