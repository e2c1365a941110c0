"""
Unit tests for the sentence decoder and the captioning model.

Tests:
- GLU and the global image feature
- one decode step against an independent numpy recompute
- teacher-forced unrolling, batching and the emission mask
- model creation, parameter naming and end-to-end gradients
"""
from dataclasses import replace

import numpy as np
import pytest

from autograd import ContractError, DimensionError, Tensor
from model import (
    BOS_ID,
    EOS_ID,
    PAD_ID,
    CaptionModel,
    ConvAttnTrace,
    XLinearTrace,
    glu,
)
from model.decoder import FORGET_GATE_BIAS
from training.losses import cross_entropy_loss
from gradcheck import assert_gradients_match, scalarize
from test_attention import _np_xlinear


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def _np_step(model, state, token, enc):
    """Independent recompute of one decoder step for a single image."""
    dec = model.decoder
    hidden = dec.hidden_dim
    global_feature = dec.w_g.data @ np.concatenate([v.data for v in enc.v_hats])
    h, cell, context = state
    lstm_in = np.concatenate([dec.embedding.data[token], global_feature, h, context])
    gates = dec.lstm_w.data @ lstm_in + dec.lstm_b.data
    i, f = _sigmoid(gates[:hidden]), _sigmoid(gates[hidden:2 * hidden])
    g, o = np.tanh(gates[2 * hidden:3 * hidden]), _sigmoid(gates[3 * hidden:])
    cell = f * cell + i * g
    h = o * np.tanh(cell)
    attended, _, _ = _np_xlinear(dec.attention, h, enc.regions.data, enc.regions.data)
    pre = dec.w_c.data @ np.concatenate([attended, h]) + dec.b_c.data
    context = pre[:hidden] * _sigmoid(pre[hidden:])
    return dec.w_out.data @ context + dec.b_out.data, (h, cell, context)


class TestGlu:
    """Gated linear unit."""

    def test_oracle(self):
        np.testing.assert_allclose(glu(Tensor([1.0, 2.0, 3.0, -3.0])).data, [0.95257413, 0.09485175], atol=1e-8)

    def test_odd_width_rejected(self):
        with pytest.raises(DimensionError):
            glu(Tensor([1.0, 2.0, 3.0]))


class TestDecodeStep:
    """Single steps and unrolls of the decoder."""

    def test_two_step_unroll_matches_recompute(self, tiny_model, rng):
        enc = tiny_model.encode(rng.normal(size=(4, 5)))
        state = tiny_model.init_state()
        np_state = (np.zeros(6), np.zeros(6), np.zeros(6))
        for token in (BOS_ID, 4):
            logits, state, _ = tiny_model.step(state, token, enc)
            expected, np_state = _np_step(tiny_model, np_state, token, enc)
            np.testing.assert_allclose(logits.data, expected, atol=1e-10)
        assert state.step == 2

    def test_global_feature_is_projected_concat(self, tiny_model, rng):
        enc = tiny_model.encode(rng.normal(size=(4, 5)))
        joined = np.concatenate([v.data for v in enc.v_hats])
        np.testing.assert_allclose(tiny_model.global_feature(enc).data, tiny_model.decoder.w_g.data @ joined, atol=1e-12)

    def test_step_log_probs_never_emit_pad_or_bos(self, tiny_model, rng):
        enc = tiny_model.encode(rng.normal(size=(4, 5)))
        log_probs, _, _ = tiny_model.step_log_probs(tiny_model.init_state(), BOS_ID, enc)
        assert log_probs.data[PAD_ID] == -np.inf and log_probs.data[BOS_ID] == -np.inf
        assert np.exp(log_probs.data).sum() == pytest.approx(1.0, abs=1e-12)

    def test_teacher_forcing_equals_manual_unroll(self, tiny_model, rng):
        enc = tiny_model.encode(rng.normal(size=(4, 5)))
        tokens = np.array([BOS_ID, 4, 5, EOS_ID])
        stacked = tiny_model.teacher_forced_logits(enc, tokens)
        state = tiny_model.init_state()
        for t, token in enumerate(tokens):
            logits, state, _ = tiny_model.step(state, token, enc)
            np.testing.assert_allclose(stacked.data[t], logits.data, atol=1e-12)

    def test_batched_teacher_forcing_matches_single(self, tiny_model, rng):
        regions = rng.normal(size=(2, 4, 5))
        tokens = np.array([[BOS_ID, 4, 5], [BOS_ID, 6, PAD_ID]])
        batched = tiny_model.teacher_forced_logits(tiny_model.encode(regions), tokens)
        assert batched.shape == (2, 3, 7)
        for i in range(2):
            single = tiny_model.teacher_forced_logits(tiny_model.encode(regions[i]), tokens[i])
            np.testing.assert_allclose(batched.data[i], single.data, atol=1e-12)

    def test_trace_kind_follows_attention(self, tiny_config, rng):
        regions = rng.normal(size=(4, 5))
        for kind, trace_type in (("xlinear", XLinearTrace), ("conventional", ConvAttnTrace)):
            model = CaptionModel.create(replace(tiny_config, decoder_attention=kind), seed=0)
            enc = model.encode(regions)
            _, _, trace = model.step(model.init_state(), BOS_ID, enc, keep_trace=True)
            assert isinstance(trace, trace_type)
            assert trace.spatial_weights.sum() == pytest.approx(1.0)

    def test_out_of_vocabulary_token(self, tiny_model, rng):
        enc = tiny_model.encode(rng.normal(size=(4, 5)))
        with pytest.raises(ContractError):
            tiny_model.step(tiny_model.init_state(), 7, enc)

    def test_token_shape_must_match_state(self, tiny_model, rng):
        enc = tiny_model.encode(rng.normal(size=(2, 4, 5)))
        with pytest.raises(DimensionError):
            tiny_model.step(tiny_model.init_state((2,)), np.array([1, 1, 1]), enc)


class TestCaptionModel:
    """Construction and end-to-end gradients."""

    def test_same_seed_same_weights(self, tiny_config):
        a = CaptionModel.create(tiny_config, seed=9)
        b = CaptionModel.create(tiny_config, seed=9)
        for (name, x), (_, y) in zip(a.named_parameters(), b.named_parameters()):
            np.testing.assert_array_equal(x.data, y.data, err_msg=name)

    def test_parameter_names_are_stable(self, tiny_model):
        names = list(tiny_model.parameter_shapes())
        assert names[0] == "encoder.layers.0.attention.w_k"
        assert "decoder.embedding" in names
        assert "encoder.projection.weight" in names
        assert tiny_model.parameter_shapes()["decoder.w_g"] == (6, 6 + 2 * 6)

    def test_forget_gate_bias(self, tiny_model):
        bias = tiny_model.decoder.lstm_b.data
        np.testing.assert_array_equal(bias[6:12], FORGET_GATE_BIAS)
        assert not bias[:6].any()

    def test_encoder_blocks_change_global_feature_width(self, tiny_config):
        model = CaptionModel.create(replace(tiny_config, encoder_blocks=0))
        assert model.decoder.w_g.shape == (6, 6)
        assert model.encoder.num_layers == 0

    def test_zero_grad(self, tiny_model, rng):
        for t in tiny_model.parameters():
            t.grad = np.ones_like(t.data)
        tiny_model.zero_grad()
        assert all(t.grad is None for t in tiny_model.parameters())

    def test_cross_entropy_gradients_end_to_end(self, tiny_model, rng):
        regions = Tensor(rng.normal(size=(3, 5)))
        inputs = np.array([BOS_ID, 4, 5])
        targets = np.array([4, 5, EOS_ID])

        def fn():
            logits = tiny_model.teacher_forced_logits(tiny_model.encode(regions), inputs)
            return cross_entropy_loss(logits, targets)

        params = tiny_model.parameter_dict()
        checked = [
            params["decoder.embedding"],
            params["decoder.lstm_w"],
            params["decoder.attention.w_b"],
            params["decoder.w_out"],
            params["encoder.layers.0.attention.w_qk"],
            params["encoder.layers.1.update.value_gain"],
            params["encoder.projection.bias"],
        ]
        assert_gradients_match(fn, checked)

    def test_batched_logits_gradients(self, tiny_model, rng):
        regions = Tensor(rng.normal(size=(2, 3, 5)))
        tokens = np.array([[BOS_ID, 4], [BOS_ID, 5]])
        params = tiny_model.parameter_dict()

        def fn():
            return scalarize(tiny_model.teacher_forced_logits(tiny_model.encode(regions), tokens))

        assert_gradients_match(fn, [params["decoder.w_c"], params["encoder.layers.1.attention.w_e"]])
