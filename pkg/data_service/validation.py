"""
Validation of caption datasets before training.

Checks every example for:
  - region features that are not a finite (N, dim) array of the expected dim
  - empty captions
  - captions longer than the decoder's maximum length
  - words that the vocabulary maps to UNK
  - region counts that differ across the dataset (batches need equal N)

Issues are errors (blocking) or warnings (informational).
"""

from enum import Enum
from typing import List, NamedTuple, Optional, Sequence

import numpy as np

from .dataset import CaptionExample
from .vocab import Vocabulary


# ============================================================================
# Data Models
# ============================================================================

class SeverityLevel(str, Enum):
    """Classification of validation issues by severity."""
    ERROR = "error"      # Blocking issue - training cannot use the dataset
    WARNING = "warning"  # Non-blocking issue - informational only


class ValidationIssue(NamedTuple):
    """A single problem found in one example."""
    index: int               # Position of the example in the dataset
    example_id: str
    field: str               # "regions" or "caption"
    severity: SeverityLevel
    issue_type: str          # e.g. "feature_dim", "empty_caption"
    message: str


class ValidationResult(NamedTuple):
    """Complete validation report for a dataset."""
    is_valid: bool                   # True if no ERRORs (warnings allowed)
    errors: List[ValidationIssue]
    warnings: List[ValidationIssue]
    error_count: int
    warning_count: int


# ============================================================================
# Validation Functions
# ============================================================================

def _validate_regions(ex: CaptionExample, index: int, feature_dim: int) -> List[ValidationIssue]:
    regions = np.asarray(ex.regions)
    if regions.ndim != 2 or regions.shape[0] == 0:
        return [ValidationIssue(index, ex.example_id, "regions", SeverityLevel.ERROR, "region_shape",
                                f"regions must be a non-empty (N, dim) array, got shape {regions.shape}")]
    issues = []
    if regions.shape[1] != feature_dim:
        issues.append(ValidationIssue(index, ex.example_id, "regions", SeverityLevel.ERROR, "feature_dim",
                                      f"feature dim {regions.shape[1]} != expected {feature_dim}"))
    if not np.all(np.isfinite(regions)):
        issues.append(ValidationIssue(index, ex.example_id, "regions", SeverityLevel.ERROR, "non_finite",
                                      "regions contain NaN or infinite values"))
    return issues


def _validate_caption(
    ex: CaptionExample, index: int, vocab: Optional[Vocabulary], max_len: Optional[int]
) -> List[ValidationIssue]:
    if not ex.caption:
        return [ValidationIssue(index, ex.example_id, "caption", SeverityLevel.ERROR, "empty_caption",
                                "caption has no words")]
    issues = []
    if max_len is not None and len(ex.caption) > max_len:
        issues.append(ValidationIssue(index, ex.example_id, "caption", SeverityLevel.WARNING, "caption_length",
                                      f"caption has {len(ex.caption)} words, decoder keeps {max_len}"))
    if vocab is not None:
        unknown = sorted({w for w in ex.caption if w not in vocab})
        if unknown:
            issues.append(ValidationIssue(index, ex.example_id, "caption", SeverityLevel.WARNING, "unknown_words",
                                          f"words mapped to UNK: {', '.join(unknown)}"))
    return issues


def validate_dataset(
    examples: Sequence[CaptionExample],
    feature_dim: int,
    vocab: Optional[Vocabulary] = None,
    max_len: Optional[int] = None,
) -> ValidationResult:
    """
    Validate every example of a caption dataset.

    Args:
        examples: Dataset to check
        feature_dim: Expected raw region feature dimension
        vocab: Vocabulary used for training (enables the UNK check)
        max_len: Decoder maximum caption length (enables the length check)

    Returns:
        ValidationResult containing categorized issues and summary
    """
    errors: List[ValidationIssue] = []
    warnings: List[ValidationIssue] = []
    region_counts = set()

    for index, ex in enumerate(examples):
        issues = _validate_regions(ex, index, feature_dim) + _validate_caption(ex, index, vocab, max_len)
        if np.ndim(ex.regions) == 2:
            region_counts.add(np.shape(ex.regions)[0])
        for issue in issues:
            (errors if issue.severity == SeverityLevel.ERROR else warnings).append(issue)

    if len(region_counts) > 1:
        warnings.append(ValidationIssue(-1, "*", "regions", SeverityLevel.WARNING, "mixed_region_counts",
                                        f"region counts vary across examples: {sorted(region_counts)}"))

    return ValidationResult(
        is_valid=not errors,
        errors=errors,
        warnings=warnings,
        error_count=len(errors),
        warning_count=len(warnings),
    )


# ============================================================================
# Reporting Functions
# ============================================================================

def format_validation_report(result: ValidationResult) -> str:
    """Format validation results as a human-readable text report."""
    lines = ["=" * 70, "DATASET VALIDATION REPORT", "=" * 70]
    if result.is_valid:
        lines.append("✓ VALID - No critical errors found")
    else:
        lines.append(f"✗ INVALID - {result.error_count} error(s) found")
    lines.append(f"  Errors: {result.error_count}")
    lines.append(f"  Warnings: {result.warning_count}")
    lines.append("")

    for title, issues in (("ERRORS (must be fixed):", result.errors), ("WARNINGS (informational):", result.warnings)):
        if not issues:
            continue
        lines.append(title)
        lines.append("-" * 70)
        for issue in issues:
            lines.append(f"  {issue.example_id:>14s} | {issue.issue_type:20s} | {issue.message}")
        lines.append("")

    lines.append("=" * 70)
    return "\n".join(lines)
