"""
Reusable validators for configuration values.

Each function raises ``marshmallow.ValidationError`` with a message naming
the offending value.
"""
from marshmallow import ValidationError

from model.config import MAX_ENCODER_BLOCKS, AttentionKind


# ============================================================
# VALIDATOR FUNCTIONS
# ============================================================

def validate_positive_integer(value, field_name="Value"):
    """
    Validate that an integer is >= 1.

    Args:
        value: Integer to validate
        field_name: Name used in the error message

    Raises:
        ValidationError: If value is not a positive integer
    """
    if value is None or value < 1:
        raise ValidationError(f"{field_name} must be a positive integer, got {value}.")


def validate_non_negative_integer(value, field_name="Value"):
    if value is None or value < 0:
        raise ValidationError(f"{field_name} must be >= 0, got {value}.")


def validate_positive_float(value, field_name="Value"):
    if value is None or not value > 0:
        raise ValidationError(f"{field_name} must be > 0, got {value}.")


def validate_encoder_blocks(value):
    """
    Validate the number of encoder X-Linear blocks.

    Requirements:
    - 0 (no blocks) up to the 1 + M = 4 blocks of the full model

    Raises:
        ValidationError: If value is outside 0..4
    """
    if value is None or not 0 <= value <= MAX_ENCODER_BLOCKS:
        raise ValidationError(f"encoder_blocks must be between 0 and {MAX_ENCODER_BLOCKS}, got {value}.")


def validate_attention_kind(value):
    choices = [kind.value for kind in AttentionKind]
    if value not in choices:
        raise ValidationError(f"decoder_attention must be one of {choices}, got {value!r}.")


def validate_vocab_size(value):
    """Four reserved ids plus at least one word."""
    if value is None or value < 5:
        raise ValidationError(f"vocab_size must be at least 5 (4 reserved ids + 1 word), got {value}.")


def validate_noise(value):
    if value is None or value < 0:
        raise ValidationError(f"noise must be non-negative, got {value}.")


def validate_word_list(value, field_name="Value"):
    """
    Validate a list of distinct, non-empty, lower-case words.

    Raises:
        ValidationError: If the list is empty or has blank/duplicate words
    """
    if not value:
        raise ValidationError(f"{field_name} cannot be empty.")
    if any(not word or word != word.strip() or " " in word for word in value):
        raise ValidationError(f"{field_name} must be single words without spaces.")
    if len(set(value)) != len(value):
        raise ValidationError(f"{field_name} must not repeat words.")
