"""
Error types raised by the tensor substrate and everything built on it.
"""


class DimensionError(ValueError):
    """Raised when tensor shapes are inconsistent for an operation."""

    def __init__(self, message: str, *shapes):
        if shapes:
            rendered = " vs ".join(str(tuple(s)) for s in shapes)
            message = f"{message}: {rendered}"
        super().__init__(message)


class ContractError(ValueError):
    """Raised when a caller violates an operation's precondition."""
