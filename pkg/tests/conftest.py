import os
import sys

import numpy as np
import pytest

ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), ".."))
if ROOT not in sys.path:
    sys.path.insert(0, ROOT)

from data_service import ToyTaskSpec, build_vocab, gen_toy_dataset  # noqa: E402
from model import CaptionModel, ModelConfig  # noqa: E402
from training import TrainConfig  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_config():
    """Small enough for finite-difference checks over every parameter."""
    return ModelConfig(
        vocab_size=7,
        raw_feature_dim=5,
        region_dim=6,
        bilinear_dim=6,
        channel_dim=3,
        hidden_dim=6,
        word_dim=4,
        conv_attention_dim=5,
        encoder_blocks=2,
        max_caption_len=6,
    )


@pytest.fixture
def tiny_model(tiny_config):
    return CaptionModel.create(tiny_config, seed=3)


@pytest.fixture
def toy_spec():
    return ToyTaskSpec(train_size=24, val_size=8, test_size=8, seed=5)


@pytest.fixture
def toy_splits(toy_spec):
    return gen_toy_dataset(toy_spec)


@pytest.fixture
def toy_vocab(toy_splits):
    return build_vocab([ex.caption for ex in toy_splits.train], min_count=1)


@pytest.fixture
def toy_model_config(toy_spec, toy_vocab):
    return ModelConfig(
        vocab_size=len(toy_vocab),
        raw_feature_dim=toy_spec.feature_dim,
        region_dim=8,
        bilinear_dim=8,
        channel_dim=4,
        hidden_dim=8,
        word_dim=6,
        conv_attention_dim=8,
        encoder_blocks=1,
        max_caption_len=14,
    )


@pytest.fixture
def toy_train_config():
    return TrainConfig(batch_size=4, warmup=5, ce_max_steps=6, scst_max_steps=3, eval_every=0, seed=11)
