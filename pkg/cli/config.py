"""
Run Configuration.

Loads preset settings from environment variables and layers a key=value
config file and command-line flags on top:

    preset class  <  config file  <  explicit flags

Config file format (one setting per line, ``#`` starts a comment):

    # model
    encoder_blocks=4
    decoder_attention=xlinear
    elu=on
    # training
    batch_size=16
    seed=7
    # toy task (``toy_seed`` is the generator seed of the synthetic data)
    train_size=500
    toy_seed=0
    # vocabulary
    min_count=6

Keys are the field names of ModelConfig, TrainConfig and ToyTaskSpec plus
``toy_seed`` and ``min_count``. Unknown keys and invalid values raise
``marshmallow.ValidationError``.
"""
import os
from dataclasses import fields
from pathlib import Path
from typing import Dict, NamedTuple, Optional, Union

from dotenv import dotenv_values, load_dotenv
from marshmallow import ValidationError

from data_service.toy_task import ToyTaskSpec
from model.config import ModelConfig
from training.trainer import TrainConfig
from .validations import ModelConfigSchema, ToyTaskSpecSchema, TrainConfigSchema, VocabSchema

load_dotenv()


class Config:
    """Desk configuration: toy-scale model and training budgets."""

    # Model
    REGION_DIM = int(os.getenv('XLAN_REGION_DIM', '32'))
    BILINEAR_DIM = int(os.getenv('XLAN_BILINEAR_DIM', '32'))
    CHANNEL_DIM = int(os.getenv('XLAN_CHANNEL_DIM', '16'))
    HIDDEN_DIM = int(os.getenv('XLAN_HIDDEN_DIM', '32'))
    WORD_DIM = int(os.getenv('XLAN_WORD_DIM', '16'))
    CONV_ATTENTION_DIM = int(os.getenv('XLAN_CONV_ATTENTION_DIM', '32'))
    ENCODER_BLOCKS = int(os.getenv('XLAN_ENCODER_BLOCKS', '4'))
    DECODER_ATTENTION = os.getenv('XLAN_DECODER_ATTENTION', 'xlinear')
    ELU = os.getenv('XLAN_ELU', 'on').lower() in ('on', 'true', '1', 'yes')
    MAX_CAPTION_LEN = int(os.getenv('XLAN_MAX_CAPTION_LEN', '16'))

    # Training
    BATCH_SIZE = int(os.getenv('XLAN_BATCH_SIZE', '16'))
    WARMUP = int(os.getenv('XLAN_WARMUP', '200'))
    CE_MAX_STEPS = int(os.getenv('XLAN_CE_MAX_STEPS', '2000'))
    CE_MAX_EPOCHS = int(os.getenv('XLAN_CE_MAX_EPOCHS', '70'))
    SCST_LR = float(os.getenv('XLAN_SCST_LR', '1e-5'))
    SCST_MAX_STEPS = int(os.getenv('XLAN_SCST_MAX_STEPS', '500'))
    SCST_MAX_EPOCHS = int(os.getenv('XLAN_SCST_MAX_EPOCHS', '35'))
    BEAM = int(os.getenv('XLAN_BEAM', '3'))
    CLIP_NORM = float(os.getenv('XLAN_CLIP_NORM', '5.0'))
    SEED = int(os.getenv('XLAN_SEED', '0'))
    EVAL_EVERY = int(os.getenv('XLAN_EVAL_EVERY', '100'))

    # Toy task
    NUM_SLOTS = int(os.getenv('XLAN_NUM_SLOTS', '6'))
    NOISE = float(os.getenv('XLAN_NOISE', '0.1'))
    TRAIN_SIZE = int(os.getenv('XLAN_TRAIN_SIZE', '2000'))
    VAL_SIZE = int(os.getenv('XLAN_VAL_SIZE', '200'))
    TEST_SIZE = int(os.getenv('XLAN_TEST_SIZE', '200'))
    TOY_SEED = int(os.getenv('XLAN_TOY_SEED', '0'))

    # Vocabulary
    MIN_COUNT = int(os.getenv('XLAN_MIN_COUNT', '6'))

    # Files
    OUTPUT_DIR = os.getenv('XLAN_OUTPUT_DIR', 'runs/default')
    LOG_LEVEL = os.getenv('XLAN_LOG_LEVEL', 'WARNING')


class CocoConfig(Config):
    """COCO-scale dimensions and schedule."""
    RAW_FEATURE_DIM = 2048
    REGION_DIM = 1024
    BILINEAR_DIM = 1024
    CHANNEL_DIM = 512
    HIDDEN_DIM = 1024
    WORD_DIM = 1024
    CONV_ATTENTION_DIM = 512
    MAX_CAPTION_LEN = 20
    BATCH_SIZE = 40
    WARMUP = 10000
    CE_MAX_STEPS = 10 ** 9
    CE_MAX_EPOCHS = 70
    SCST_MAX_STEPS = 10 ** 9
    SCST_MAX_EPOCHS = 35


class TestingConfig(Config):
    """Tiny model and data for fast tests."""
    __test__ = False
    REGION_DIM = 8
    BILINEAR_DIM = 8
    CHANNEL_DIM = 4
    HIDDEN_DIM = 8
    WORD_DIM = 6
    CONV_ATTENTION_DIM = 8
    ENCODER_BLOCKS = 2
    MAX_CAPTION_LEN = 12
    BATCH_SIZE = 4
    WARMUP = 10
    CE_MAX_STEPS = 20
    SCST_MAX_STEPS = 5
    EVAL_EVERY = 10
    TRAIN_SIZE = 24
    VAL_SIZE = 8
    TEST_SIZE = 8
    MIN_COUNT = 1


PRESETS = {
    'desk': Config,
    'coco': CocoConfig,
    'testing': TestingConfig,
}


class Settings(NamedTuple):
    """Fully resolved settings of one command."""
    model: ModelConfig
    train: TrainConfig
    toy: ToyTaskSpec
    min_count: int


MODEL_KEYS = tuple(f.name for f in fields(ModelConfig))
TRAIN_KEYS = tuple(f.name for f in fields(TrainConfig))
TOY_KEYS = tuple(f.name for f in fields(ToyTaskSpec) if f.name != 'seed') + ('toy_seed',)
VOCAB_KEYS = ('min_count',)
KNOWN_KEYS = frozenset(MODEL_KEYS + TRAIN_KEYS + TOY_KEYS + VOCAB_KEYS)


def preset_values(preset: type) -> Dict[str, object]:
    """Collect the preset attributes that correspond to config keys."""
    return {key: getattr(preset, key.upper()) for key in KNOWN_KEYS if hasattr(preset, key.upper())}


def load_config_file(path: Union[str, Path]) -> Dict[str, str]:
    """
    Parse a key=value config file.

    Raises:
        OSError: If the file cannot be read
        ValidationError: On unknown keys or keys without a value
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"config file not found: {path}")
    values = dotenv_values(path)
    errors = {}
    for key, value in values.items():
        if key not in KNOWN_KEYS:
            errors[key] = ['Unknown config key.']
        elif value is None or value == '':
            errors[key] = ['Missing value.']
    if errors:
        raise ValidationError(errors)
    return dict(values)


def resolve_settings(
    preset: str = 'desk',
    config_file: Optional[Union[str, Path]] = None,
    overrides: Optional[Dict[str, object]] = None,
) -> Settings:
    """
    Layer preset, config file and flag overrides and validate the result.

    Args:
        preset: Name in PRESETS
        config_file: Optional key=value file
        overrides: Flag values; None entries are ignored

    Raises:
        ValidationError: On an unknown preset, key or invalid value
    """
    if preset not in PRESETS:
        raise ValidationError({'preset': [f'Unknown preset {preset!r}; choose from {sorted(PRESETS)}.']})
    values = preset_values(PRESETS[preset])
    if config_file is not None:
        values.update(load_config_file(config_file))
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key not in KNOWN_KEYS:
            raise ValidationError({key: ['Unknown config key.']})
        values[key] = value

    toy = {key: values[key] for key in TOY_KEYS if key in values}
    if 'toy_seed' in toy:
        toy['seed'] = toy.pop('toy_seed')

    return Settings(
        model=ModelConfigSchema().load({k: values[k] for k in MODEL_KEYS if k in values}),
        train=TrainConfigSchema().load({k: values[k] for k in TRAIN_KEYS if k in values}),
        toy=ToyTaskSpecSchema().load(toy),
        min_count=VocabSchema().load({k: values[k] for k in VOCAB_KEYS if k in values}),
    )
