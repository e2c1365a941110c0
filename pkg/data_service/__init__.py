"""
Data Service Package

Vocabulary construction, the synthetic toy task, region feature files,
dataset validation, checkpoints and attention trace export.
"""

from .errors import CheckpointError, FileFormatError
from .vocab import DEFAULT_MIN_COUNT, RESERVED_TOKENS, Vocabulary, build_vocab
from .dataset import CaptionBatch, CaptionExample, batch_for_step, collate, epoch_order, iterate_batches
from .toy_task import ToySplits, ToyTaskSpec, gen_toy_dataset, make_example, split_of, toy_alphabet
from .region_features import (
    load_dataset,
    load_split,
    read_manifest,
    read_region_features,
    save_dataset,
    write_manifest,
    write_region_features,
)
from .validation import SeverityLevel, ValidationIssue, ValidationResult, format_validation_report, validate_dataset
from .checkpoint import Checkpoint, check_shapes, load_checkpoint, save_checkpoint
from .attention_dump import attention_records, dump_attention, load_attention_dump, replay_attention

__all__ = [
    "CheckpointError",
    "FileFormatError",
    "DEFAULT_MIN_COUNT",
    "RESERVED_TOKENS",
    "Vocabulary",
    "build_vocab",
    "CaptionBatch",
    "CaptionExample",
    "batch_for_step",
    "collate",
    "epoch_order",
    "iterate_batches",
    "ToySplits",
    "ToyTaskSpec",
    "gen_toy_dataset",
    "make_example",
    "split_of",
    "toy_alphabet",
    "load_dataset",
    "load_split",
    "read_manifest",
    "read_region_features",
    "save_dataset",
    "write_manifest",
    "write_region_features",
    "SeverityLevel",
    "ValidationIssue",
    "ValidationResult",
    "format_validation_report",
    "validate_dataset",
    "Checkpoint",
    "check_shapes",
    "load_checkpoint",
    "save_checkpoint",
    "attention_records",
    "dump_attention",
    "load_attention_dump",
    "replay_attention",
]
