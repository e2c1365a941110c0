"""Unit tests for region feature files, manifests and dataset directories."""

import struct

import numpy as np
import pytest

from data_service import (
    FileFormatError,
    load_dataset,
    load_split,
    read_manifest,
    read_region_features,
    save_dataset,
    write_manifest,
    write_region_features,
)
from data_service.region_features import HEADER, MAGIC, VERSION


class TestRegionFeatureFile:
    """Binary region feature layout."""

    def test_header_layout(self, tmp_path):
        path = tmp_path / "img.xlrf"
        write_region_features(path, np.arange(6, dtype=float).reshape(2, 3))
        raw = path.read_bytes()
        assert raw[:4] == b"XLRF"
        assert struct.unpack("<III", raw[4:16]) == (1, 2, 3)
        assert len(raw) == 16 + 2 * 3 * 4
        assert np.frombuffer(raw[16:], dtype="<f4").tolist() == [0, 1, 2, 3, 4, 5]

    def test_read_returns_float64_at_float32_precision(self, tmp_path, rng):
        regions = rng.normal(size=(5, 4))
        path = tmp_path / "img.xlrf"
        write_region_features(path, regions)
        loaded = read_region_features(path)
        assert loaded.dtype == np.float64
        np.testing.assert_array_equal(loaded, regions.astype(np.float32).astype(np.float64))

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "img.xlrf"
        path.write_bytes(HEADER.pack(b"NOPE", VERSION, 1, 1) + b"\0" * 4)
        with pytest.raises(FileFormatError, match="expected b'XLRF', found b'NOPE'"):
            read_region_features(path)

    def test_unsupported_version(self, tmp_path):
        path = tmp_path / "img.xlrf"
        path.write_bytes(HEADER.pack(MAGIC, 2, 1, 1) + b"\0" * 4)
        with pytest.raises(FileFormatError, match="expected 1, found 2"):
            read_region_features(path)

    @pytest.mark.parametrize("payload", [b"\0" * 20, b"\0" * 28, b""])
    def test_payload_length_mismatch(self, tmp_path, payload):
        path = tmp_path / "img.xlrf"
        path.write_bytes(HEADER.pack(MAGIC, VERSION, 2, 3) + payload)
        with pytest.raises(FileFormatError, match="expected 24"):
            read_region_features(path)

    def test_truncated_header(self, tmp_path):
        path = tmp_path / "img.xlrf"
        path.write_bytes(b"XLRF\x01")
        with pytest.raises(FileFormatError):
            read_region_features(path)

    def test_rejects_non_matrix(self, tmp_path):
        with pytest.raises(FileFormatError):
            write_region_features(tmp_path / "x.xlrf", np.zeros(3))


class TestManifest:
    """Tab-separated image id to path map."""

    def test_write_read(self, tmp_path):
        entries = {"img-1": "features/img-1.xlrf", "img-2": "features/img-2.xlrf"}
        write_manifest(tmp_path / "m.txt", entries)
        assert read_manifest(tmp_path / "m.txt") == entries

    def test_blank_lines_skipped(self, tmp_path):
        (tmp_path / "m.txt").write_text("a\tx.xlrf\n\nb\ty.xlrf\n")
        assert read_manifest(tmp_path / "m.txt") == {"a": "x.xlrf", "b": "y.xlrf"}

    def test_malformed_line(self, tmp_path):
        (tmp_path / "m.txt").write_text("a\tx.xlrf\nbroken\n")
        with pytest.raises(FileFormatError, match="line 2"):
            read_manifest(tmp_path / "m.txt")


class TestDatasetDirectory:
    """save_dataset / load_dataset."""

    def test_save_and_load(self, tmp_path, toy_splits):
        save_dataset(tmp_path, {"train": toy_splits.train[:5], "val": toy_splits.val[:2]})
        loaded = load_dataset(tmp_path)
        assert set(loaded) == {"train", "val"}
        for original, restored in zip(toy_splits.train[:5], loaded["train"]):
            assert restored.example_id == original.example_id
            assert restored.caption == original.caption
            np.testing.assert_allclose(restored.regions, original.regions, atol=1e-6)
        assert (tmp_path / "features" / f"{toy_splits.val[0].example_id}.xlrf").exists()

    def test_captions_table_is_tab_separated(self, tmp_path, toy_splits):
        save_dataset(tmp_path, {"test": toy_splits.test[:1]})
        lines = (tmp_path / "test_captions.tsv").read_text().splitlines()
        assert lines[0] == "image_id\tcaption"
        assert lines[1] == f"{toy_splits.test[0].example_id}\t{' '.join(toy_splits.test[0].caption)}"

    def test_missing_manifest_entry(self, tmp_path, toy_splits):
        save_dataset(tmp_path, {"train": toy_splits.train[:2]})
        first = toy_splits.train[0].example_id
        write_manifest(tmp_path / "train_manifest.txt", {first: f"features/{first}.xlrf"})
        with pytest.raises(FileFormatError, match="missing from manifest"):
            load_split(tmp_path, "train")
