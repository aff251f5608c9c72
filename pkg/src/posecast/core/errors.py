"""
Exception hierarchy shared across posecast modules.
"""


class PosecastError(Exception):
    """Base class for errors raised by posecast."""
    pass


class ContractError(PosecastError, ValueError):
    """Raised when an argument violates a precondition (shape, range, mask)."""
    pass


class GridRangeError(PosecastError, IndexError):
    """Raised when a linear cell index falls outside the grid."""
    pass


class DomainError(PosecastError, ValueError):
    """Raised when numeric input is outside the domain of an operation (NaN/Inf)."""
    pass


class HeatmapFormatError(PosecastError):
    """Raised when a binary or manifest payload cannot be decoded."""

    def __init__(self, message: str, offset: int = 0):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset
