"""
Marshmallow schemas for run configuration.

Each schema validates one group of settings (model, training, toy task,
vocabulary) and loads it into the matching config object. Values may arrive
as strings from a config file or as typed values from presets and flags.
"""
from marshmallow import Schema, ValidationError, fields, post_load, validates, validates_schema

from data_service.toy_task import ToyTaskSpec
from data_service.vocab import DEFAULT_MIN_COUNT
from model.config import ModelConfig
from training.trainer import TrainConfig
from .validators import (
    validate_attention_kind,
    validate_encoder_blocks,
    validate_noise,
    validate_non_negative_integer,
    validate_positive_float,
    validate_positive_integer,
    validate_vocab_size,
    validate_word_list,
)


class WordList(fields.Field):
    """A list of words, given either as a list or as a comma-separated string."""

    default_error_messages = {"invalid": "Not a comma-separated word list."}

    def _deserialize(self, value, attr, data, **kwargs):
        if isinstance(value, str):
            return [word.strip() for word in value.split(",") if word.strip()]
        if isinstance(value, (list, tuple)):
            return [str(word) for word in value]
        raise self.make_error("invalid")


class ModelConfigSchema(Schema):
    """
    Schema for ModelConfig validation.

    Validates:
    - every dimension: positive integer
    - vocab_size: at least 5
    - encoder_blocks: 0..4
    - decoder_attention: xlinear | conventional
    - elu: boolean (on/off, true/false, 1/0)
    """

    vocab_size = fields.Integer()
    raw_feature_dim = fields.Integer()
    region_dim = fields.Integer()
    bilinear_dim = fields.Integer()
    channel_dim = fields.Integer()
    hidden_dim = fields.Integer()
    word_dim = fields.Integer()
    conv_attention_dim = fields.Integer()
    encoder_blocks = fields.Integer()
    decoder_attention = fields.String()
    elu = fields.Boolean()
    max_caption_len = fields.Integer()

    @validates("vocab_size")
    def validate_vocab_size_field(self, value, **kwargs):
        validate_vocab_size(value)

    @validates("raw_feature_dim", "region_dim", "bilinear_dim", "channel_dim", "hidden_dim", "word_dim",
               "conv_attention_dim", "max_caption_len")
    def validate_dimension_field(self, value, data_key=None, **kwargs):
        validate_positive_integer(value, data_key or "Dimension")

    @validates("encoder_blocks")
    def validate_encoder_blocks_field(self, value, **kwargs):
        validate_encoder_blocks(value)

    @validates("decoder_attention")
    def validate_attention_field(self, value, **kwargs):
        validate_attention_kind(value)

    @post_load
    def make_config(self, data, **kwargs):
        return ModelConfig(**data)


class TrainConfigSchema(Schema):
    """
    Schema for TrainConfig validation.

    Validates:
    - batch_size, warmup, budgets, beam: positive integers
    - scst_lr, clip_norm: > 0
    - eval_every, checkpoint_every: >= 0 (0 disables)
    """

    batch_size = fields.Integer()
    warmup = fields.Integer()
    ce_max_steps = fields.Integer()
    ce_max_epochs = fields.Integer()
    scst_lr = fields.Float()
    scst_max_steps = fields.Integer()
    scst_max_epochs = fields.Integer()
    beam = fields.Integer()
    clip_norm = fields.Float()
    seed = fields.Integer()
    eval_every = fields.Integer()
    eval_examples = fields.Integer()
    checkpoint_every = fields.Integer()

    @validates("batch_size", "warmup", "ce_max_steps", "ce_max_epochs", "scst_max_steps", "scst_max_epochs",
               "beam", "eval_examples")
    def validate_count_field(self, value, data_key=None, **kwargs):
        validate_positive_integer(value, data_key or "Count")

    @validates("scst_lr", "clip_norm")
    def validate_rate_field(self, value, data_key=None, **kwargs):
        validate_positive_float(value, data_key or "Rate")

    @validates("seed", "eval_every", "checkpoint_every")
    def validate_counter_field(self, value, data_key=None, **kwargs):
        validate_non_negative_integer(value, data_key or "Counter")

    @post_load
    def make_config(self, data, **kwargs):
        return TrainConfig(**data)


class ToyTaskSpecSchema(Schema):
    """
    Schema for ToyTaskSpec validation.

    Validates:
    - num_slots, dataset sizes: positive integers
    - colors, shapes: distinct single words
    - 1 <= min_objects <= max_objects <= num_slots
    """

    num_slots = fields.Integer()
    colors = WordList()
    shapes = WordList()
    noise = fields.Float()
    min_objects = fields.Integer()
    max_objects = fields.Integer()
    train_size = fields.Integer()
    val_size = fields.Integer()
    test_size = fields.Integer()
    seed = fields.Integer()

    @validates("num_slots", "min_objects", "max_objects", "train_size", "val_size", "test_size")
    def validate_count_field(self, value, data_key=None, **kwargs):
        validate_positive_integer(value, data_key or "Count")

    @validates("colors", "shapes")
    def validate_words_field(self, value, data_key=None, **kwargs):
        validate_word_list(value, data_key or "Words")

    @validates("noise")
    def validate_noise_field(self, value, **kwargs):
        validate_noise(value)

    @validates_schema
    def validate_object_counts(self, data, **kwargs):
        spec = ToyTaskSpec()
        low = data.get("min_objects", spec.min_objects)
        high = data.get("max_objects", spec.max_objects)
        slots = data.get("num_slots", spec.num_slots)
        if not low <= high <= slots:
            raise ValidationError(
                f"need min_objects <= max_objects <= num_slots, got {low}, {high}, {slots}.", "max_objects"
            )

    @post_load
    def make_spec(self, data, **kwargs):
        for key in ("colors", "shapes"):
            if key in data:
                data[key] = tuple(data[key])
        return ToyTaskSpec(**data)


class VocabSchema(Schema):
    """Schema for vocabulary settings."""

    min_count = fields.Integer(load_default=DEFAULT_MIN_COUNT)

    @validates("min_count")
    def validate_min_count_field(self, value, **kwargs):
        validate_positive_integer(value, "min_count")

    @post_load
    def unwrap(self, data, **kwargs):
        return data["min_count"]
