"""Unit tests for self-critical sequence training."""

import numpy as np
import pytest

from autograd import ContractError, backward, log_softmax, no_grad
from data_service import RESERVED_TOKENS, CaptionExample, Vocabulary, collate
from inference import greedy_decode_batch
from model import BOS_ID, EOS_ID, PAD_ID, CaptionModel, ModelConfig
from model.captioner import NON_EMITTABLE_IDS
from training import AdamState, adam_step, bleu_reward, sample_words, scst_loss


@pytest.fixture
def small_vocab():
    return Vocabulary(list(RESERVED_TOKENS) + ["dot"])


@pytest.fixture
def small_model():
    config = ModelConfig(vocab_size=5, raw_feature_dim=3, region_dim=4, bilinear_dim=4, channel_dim=2,
                         hidden_dim=4, word_dim=3, conv_attention_dim=4, encoder_blocks=1, max_caption_len=5)
    return CaptionModel.create(config, seed=8)


@pytest.fixture
def small_batch(rng, small_vocab):
    examples = [CaptionExample(f"img-{i}", rng.normal(size=(3, 3)), ["dot"] * (i + 1)) for i in range(3)]
    return collate(examples, small_vocab)


def _replayed_log_prob(model, regions, sample, max_len):
    """Σ log p of a sampled caption, recomputed by teacher forcing."""
    finished = len(sample) < max_len
    emitted = list(sample) + ([EOS_ID] if finished else [])
    inputs = np.array([BOS_ID] + emitted[:-1])
    with no_grad():
        logits = model.teacher_forced_logits(model.encode(regions), inputs).numpy()
    logits[:, list(NON_EMITTABLE_IDS)] = -np.inf
    log_probs = log_softmax(logits).numpy()
    return float(log_probs[np.arange(len(emitted)), emitted].sum())


class TestSampleWords:
    """Inverse-CDF sampling from log-probabilities."""

    def test_never_draws_zero_probability_words(self, rng):
        row = np.log(np.array([0.0, 0.0, 0.2, 0.5, 0.3]))
        draws = sample_words(np.tile(row, (5000, 1)), rng)
        assert set(draws.tolist()) <= {2, 3, 4}

    def test_frequencies_follow_distribution(self, rng):
        probs = np.array([0.0, 0.0, 0.2, 0.5, 0.3])
        draws = sample_words(np.tile(np.log(probs), (20000, 1)), rng)
        frequencies = np.bincount(draws, minlength=5) / len(draws)
        np.testing.assert_allclose(frequencies, probs, atol=0.02)

    def test_same_generator_state_same_draws(self):
        row = np.log(np.full((10, 4), 0.25))
        a = sample_words(row, np.random.default_rng(3))
        b = sample_words(row, np.random.default_rng(3))
        np.testing.assert_array_equal(a, b)


class TestScstLoss:
    """The self-critical loss and its gradient."""

    def test_constant_reward_gives_zero_gradient(self, small_model, small_batch):
        loss, report = scst_loss(small_model, small_batch, reward_fn=lambda c, r: 0.7, rng=np.random.default_rng(0))
        assert loss.item() == 0.0
        np.testing.assert_array_equal(report.advantages, 0.0)
        backward(loss)
        params = small_model.parameter_dict()
        assert all(t.grad is None or not t.grad.any() for t in params.values())

        before = {name: t.data.copy() for name, t in params.items()}
        adam_step(AdamState.create(params), params, None, lr=0.1)
        for name, t in params.items():
            np.testing.assert_array_equal(t.data, before[name])

    def test_replay_oracle(self, small_model, small_batch):
        max_len = small_model.config.max_caption_len
        loss, report = scst_loss(
            small_model, small_batch, reward_fn=lambda c, r: float(len(c)), rng=np.random.default_rng(42)
        )
        replayed = np.array([
            _replayed_log_prob(small_model, small_batch.regions[i], sample, max_len)
            for i, sample in enumerate(report.samples)
        ])
        np.testing.assert_allclose(report.sample_log_probs, replayed, atol=1e-10)

        rewards = np.array([len(s) for s in report.samples], dtype=float)
        baseline = np.array([len(g) for g in report.baselines], dtype=float)
        expected = np.mean(-(rewards - baseline) * replayed)
        assert loss.item() == pytest.approx(expected, abs=1e-10)

    def test_baseline_is_greedy_decode(self, small_model, small_batch):
        _, report = scst_loss(small_model, small_batch, rng=np.random.default_rng(1))
        with no_grad():
            greedy = greedy_decode_batch(small_model, small_model.encode(small_batch.regions), 5)
        assert report.baselines == [c.tokens for c in greedy]

    def test_samples_exclude_reserved_words(self, small_model, small_batch):
        _, report = scst_loss(small_model, small_batch, rng=np.random.default_rng(2))
        for sample in report.samples:
            assert PAD_ID not in sample and BOS_ID not in sample and EOS_ID not in sample
            assert len(sample) <= 5

    def test_same_generator_same_loss(self, small_model, small_batch):
        a, _ = scst_loss(small_model, small_batch, rng=np.random.default_rng(5))
        b, _ = scst_loss(small_model, small_batch, rng=np.random.default_rng(5))
        assert a.item() == b.item()

    def test_rewards_use_references(self, small_model, small_batch):
        _, report = scst_loss(small_model, small_batch, rng=np.random.default_rng(6))
        expected = [bleu_reward(s, [ref]) for s, ref in zip(report.samples, small_batch.references)]
        np.testing.assert_allclose(report.sample_rewards, expected)
        np.testing.assert_allclose(report.advantages, report.sample_rewards - report.baseline_rewards)

    def test_gradient_reaches_parameters(self, small_model, small_batch):
        loss, report = scst_loss(small_model, small_batch, reward_fn=lambda c, r: float(len(c)),
                                 rng=np.random.default_rng(42))
        backward(loss)
        if np.any(report.advantages != 0):
            assert np.abs(small_model.decoder.w_out.grad).sum() > 0

    @pytest.mark.parametrize("max_len", [0, -1])
    def test_max_len_must_be_positive(self, small_model, small_batch, max_len):
        with pytest.raises(ContractError):
            scst_loss(small_model, small_batch, max_len=max_len)
