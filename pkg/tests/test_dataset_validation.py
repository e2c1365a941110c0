"""Unit tests for data_service.validation module."""

import numpy as np

from data_service import CaptionExample, Vocabulary, format_validation_report, validate_dataset
from data_service.validation import SeverityLevel, ValidationResult, _validate_caption, _validate_regions


VOCAB = Vocabulary(["<pad>", "<bos>", "<eos>", "<unk>", "a", "red", "circle"])


def _example(regions=None, caption=("a", "red", "circle"), example_id="img-0"):
    return CaptionExample(example_id, np.zeros((3, 4)) if regions is None else regions, list(caption))


def test_validate_regions_reports_dim_and_non_finite():
    regions = np.zeros((3, 5))
    regions[1, 2] = np.nan
    issues = _validate_regions(_example(regions), index=0, feature_dim=4)

    assert {i.issue_type for i in issues} == {"feature_dim", "non_finite"}
    assert all(i.severity == SeverityLevel.ERROR for i in issues)


def test_validate_regions_rejects_empty_set():
    issues = _validate_regions(_example(np.zeros((0, 4))), index=0, feature_dim=4)
    assert [i.issue_type for i in issues] == ["region_shape"]


def test_validate_caption_empty_is_error():
    issues = _validate_caption(_example(caption=()), index=2, vocab=VOCAB, max_len=5)
    assert len(issues) == 1
    assert issues[0].severity == SeverityLevel.ERROR
    assert issues[0].index == 2


def test_validate_caption_warns_on_length_and_unknown_words():
    issues = _validate_caption(_example(caption=("a", "blue", "circle", "x")), index=0, vocab=VOCAB, max_len=3)
    assert {i.issue_type for i in issues} == {"caption_length", "unknown_words"}
    assert all(i.severity == SeverityLevel.WARNING for i in issues)
    assert "blue, x" in [i for i in issues if i.issue_type == "unknown_words"][0].message


def test_validate_caption_ok():
    assert _validate_caption(_example(caption=("A", "red")), index=0, vocab=VOCAB, max_len=3) == []


def test_validate_dataset_collects_errors_and_warnings():
    examples = [
        _example(example_id="ok"),
        _example(np.full((3, 4), np.inf), example_id="bad"),
        _example(np.zeros((2, 4)), caption=("a", "green"), example_id="odd"),
    ]
    result = validate_dataset(examples, feature_dim=4, vocab=VOCAB)

    assert isinstance(result, ValidationResult)
    assert result.is_valid is False
    assert result.error_count == 1
    assert result.errors[0].example_id == "bad"
    assert {w.issue_type for w in result.warnings} == {"unknown_words", "mixed_region_counts"}
    assert [w.index for w in result.warnings if w.issue_type == "mixed_region_counts"] == [-1]


def test_validate_dataset_toy_splits_are_valid(toy_splits, toy_vocab, toy_spec):
    result = validate_dataset(toy_splits.train, toy_spec.feature_dim, toy_vocab, max_len=14)
    assert result.is_valid is True
    assert result.error_count == 0
    assert result.warning_count == 0


def test_format_validation_report_valid():
    report = format_validation_report(validate_dataset([_example()], feature_dim=4))
    assert "DATASET VALIDATION REPORT" in report
    assert "✓ VALID" in report
    assert "ERRORS" not in report


def test_format_validation_report_invalid_lists_issues():
    result = validate_dataset([_example(caption=(), example_id="img-9")], feature_dim=4)
    report = format_validation_report(result)
    assert "✗ INVALID - 1 error(s) found" in report
    assert "empty_caption" in report
    assert "img-9" in report
