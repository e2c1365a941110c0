"""Unit tests for the checkpoint container."""

import numpy as np
import pytest

from data_service import Checkpoint, CheckpointError, FileFormatError, check_shapes, load_checkpoint, save_checkpoint
from data_service.checkpoint import PREAMBLE
from model import CaptionModel
from training.trainer import load_model


@pytest.fixture
def checkpoint(tiny_model, rng):
    params = {name: t.data.copy() for name, t in tiny_model.named_parameters()}
    return Checkpoint(
        model_config=tiny_model.config.to_dict(),
        parameters=params,
        train_config={"batch_size": 4},
        vocab=["<pad>", "<bos>", "<eos>", "<unk>", "a", "b", "c"],
        optimizer_step=3,
        moment1={k: rng.normal(size=v.shape) for k, v in params.items()},
        moment2={k: rng.random(size=v.shape) for k, v in params.items()},
        step=3,
        phase="scst",
        seed=11,
        rng_state=np.random.default_rng(5).bit_generator.state,
    )


class TestRoundTrip:
    """save_checkpoint then load_checkpoint."""

    def test_bit_exact(self, tmp_path, checkpoint):
        path = tmp_path / "run.xlck"
        save_checkpoint(path, checkpoint)
        loaded = load_checkpoint(path)
        assert loaded.parameters.keys() == checkpoint.parameters.keys()
        for name, array in checkpoint.parameters.items():
            np.testing.assert_array_equal(loaded.parameters[name], array)
            np.testing.assert_array_equal(loaded.moment1[name], checkpoint.moment1[name])
            np.testing.assert_array_equal(loaded.moment2[name], checkpoint.moment2[name])
        assert loaded.model_config == checkpoint.model_config
        assert loaded.vocab == checkpoint.vocab
        assert (loaded.step, loaded.optimizer_step, loaded.phase, loaded.seed) == (3, 3, "scst", 11)

    def test_generator_state_restores_stream(self, tmp_path, checkpoint):
        path = tmp_path / "run.xlck"
        save_checkpoint(path, checkpoint)
        restored = np.random.default_rng()
        restored.bit_generator.state = load_checkpoint(path).rng_state
        np.testing.assert_array_equal(restored.random(4), np.random.default_rng(5).random(4))

    def test_no_temporary_left_behind(self, tmp_path, checkpoint):
        save_checkpoint(tmp_path / "run.xlck", checkpoint)
        assert [p.name for p in tmp_path.iterdir()] == ["run.xlck"]

    def test_load_model(self, tmp_path, checkpoint, tiny_model):
        save_checkpoint(tmp_path / "run.xlck", checkpoint)
        model = load_model(tmp_path / "run.xlck")
        assert isinstance(model, CaptionModel)
        assert model.config == tiny_model.config
        for (name, a), (_, b) in zip(model.named_parameters(), tiny_model.named_parameters()):
            np.testing.assert_array_equal(a.data, b.data, err_msg=name)


class TestCorruption:
    """Every malformed file is rejected before anything is returned."""

    def test_bad_magic(self, tmp_path, checkpoint):
        path = tmp_path / "run.xlck"
        save_checkpoint(path, checkpoint)
        path.write_bytes(b"ABCD" + path.read_bytes()[4:])
        with pytest.raises(CheckpointError, match="magic"):
            load_checkpoint(path)

    def test_bad_version(self, tmp_path, checkpoint):
        path = tmp_path / "run.xlck"
        save_checkpoint(path, checkpoint)
        raw = path.read_bytes()
        _, _, header_len = PREAMBLE.unpack_from(raw)
        path.write_bytes(PREAMBLE.pack(b"XLCK", 9, header_len) + raw[PREAMBLE.size:])
        with pytest.raises(CheckpointError, match="expected 1, found 9"):
            load_checkpoint(path)

    @pytest.mark.parametrize("keep", [0.1, 0.5, 0.99])
    def test_truncated(self, tmp_path, checkpoint, keep):
        path = tmp_path / "run.xlck"
        save_checkpoint(path, checkpoint)
        raw = path.read_bytes()
        path.write_bytes(raw[:int(len(raw) * keep)])
        with pytest.raises(CheckpointError, match="truncated"):
            load_checkpoint(path)

    def test_trailing_bytes(self, tmp_path, checkpoint):
        path = tmp_path / "run.xlck"
        save_checkpoint(path, checkpoint)
        path.write_bytes(path.read_bytes() + b"\0")
        with pytest.raises(CheckpointError, match="trailing"):
            load_checkpoint(path)

    def test_is_a_file_format_error(self):
        assert issubclass(CheckpointError, FileFormatError)


class TestShapes:
    """Stored parameters must fit the model config."""

    def test_expected_shapes_accepted(self, tmp_path, checkpoint, tiny_model):
        save_checkpoint(tmp_path / "run.xlck", checkpoint)
        load_checkpoint(tmp_path / "run.xlck", expected_shapes=tiny_model.parameter_shapes())

    def test_shape_mismatch(self, tmp_path, checkpoint, tiny_model):
        checkpoint.parameters["decoder.w_out"] = np.zeros((3, 3))
        save_checkpoint(tmp_path / "run.xlck", checkpoint)
        with pytest.raises(CheckpointError, match="decoder.w_out"):
            load_checkpoint(tmp_path / "run.xlck", expected_shapes=tiny_model.parameter_shapes())
        with pytest.raises(CheckpointError):
            load_model(tmp_path / "run.xlck")

    def test_missing_parameter(self, tiny_model):
        shapes = tiny_model.parameter_shapes()
        params = {name: np.zeros(shape) for name, shape in shapes.items()}
        del params["decoder.b_out"]
        with pytest.raises(CheckpointError, match="decoder.b_out"):
            check_shapes(params, shapes)

    def test_extra_parameter(self, tiny_model):
        shapes = tiny_model.parameter_shapes()
        params = {name: np.zeros(shape) for name, shape in shapes.items()}
        params["decoder.bogus"] = np.zeros(1)
        with pytest.raises(CheckpointError, match="bogus"):
            check_shapes(params, shapes)
