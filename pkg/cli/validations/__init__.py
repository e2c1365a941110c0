"""Validation module for run configuration."""
from marshmallow import ValidationError

from .schemas import (
    ModelConfigSchema,
    ToyTaskSpecSchema,
    TrainConfigSchema,
    VocabSchema,
    WordList,
)

__all__ = [
    'ModelConfigSchema',
    'ToyTaskSpecSchema',
    'TrainConfigSchema',
    'VocabSchema',
    'WordList',
    'ValidationError',
]
