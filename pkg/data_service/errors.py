"""
File-format errors for region features, datasets and checkpoints.
"""


class FileFormatError(ValueError):
    """Raised when a file does not match its documented layout."""

    def __init__(self, message: str, path=None, expected=None, found=None):
        details = []
        if expected is not None or found is not None:
            details.append(f"expected {expected!r}, found {found!r}")
        if path is not None:
            details.append(f"file {path}")
        if details:
            message = f"{message} ({'; '.join(details)})"
        super().__init__(message)


class CheckpointError(FileFormatError):
    """Raised when a checkpoint is corrupt or does not fit the model config."""
