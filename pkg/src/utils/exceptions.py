"""Custom exceptions for tileseg."""

from typing import Optional, Sequence, Tuple


class TileSegException(Exception):
    """Base exception for tileseg.

    All custom exceptions inherit from this class so callers (the CLI, the
    pipeline workflow) can catch library errors in one place.
    """
    pass


class ConfigurationError(TileSegException):
    """Raised when configuration is invalid.

    Examples:
        - Unknown key in a run config file
        - Unparseable ``key = value`` line
        - Value outside its allowed range
    """
    pass


class ValidationError(TileSegException):
    """Raised when an operation's precondition on its inputs fails."""
    pass


class ShapeMismatchError(ValidationError):
    """Raised when tensor extents are incompatible for an operation.

    Examples:
        - conv2d input channels differ from kernel channels
        - concat_channels spatial extents differ
        - boundary gradient rows do not match the retained features
    """
    pass


class GradientError(TileSegException):
    """Raised when differentiation is requested in an invalid state.

    Examples:
        - backward on a non-scalar loss
        - backward on a loss that was not recorded on the tape
        - optimizer update on a parameter without a gradient
    """
    pass


class DegenerateHistogramError(ValidationError):
    """Raised when a histogram has fewer than two occupied bins."""
    pass


class DegenerateConfigError(ValidationError):
    """Raised when a generator configuration cannot produce a slide."""
    pass


class NoLabeledCellsError(ValidationError):
    """Raised when a loss or metric has no labeled cells to work on."""
    pass


class MapOverflowError(TileSegException):
    """Raised when a tissue component does not fit into the feature map."""

    def __init__(self, message: str, overflow: Tuple[int, int] = (0, 0)):
        """Initialize overflow error.

        Args:
            message: Error message
            overflow: Rows and columns by which the component exceeds the map
        """
        super().__init__(message)
        self.overflow = overflow


class PlacementMismatchError(ValidationError):
    """Raised when a label map or prediction map uses a foreign placement."""
    pass


class CheckpointError(TileSegException):
    """Raised when a checkpoint cannot be loaded.

    Examples:
        - architecture fingerprint differs from the requested architecture
        - a named tensor is missing from the container
    """
    pass


class TensorFormatError(TileSegException):
    """Raised when a ``TNS1`` record is malformed."""
    pass


class StageInputError(TileSegException):
    """Raised when a pipeline stage is missing the artifacts it consumes."""

    def __init__(self, message: str, missing: Optional[Sequence[str]] = None):
        """Initialize stage input error.

        Args:
            message: Error message
            missing: Paths that were expected but not found
        """
        self.missing = list(missing or [])
        if self.missing:
            message = f"{message}: {', '.join(self.missing)}"
        super().__init__(message)


class StageExecutionError(TileSegException):
    """Raised when a pipeline stage fails.

    Examples:
        - train-e2e failing inside an end-to-end step
        - eval failing on an empty test split
    """

    def __init__(self, stage_name: str, message: str, original_error: Exception = None):
        """Initialize stage execution error.

        Args:
            stage_name: Name of the stage that failed
            message: Error message
            original_error: Original exception that caused the failure
        """
        super().__init__(f"{stage_name}: {message}")
        self.stage_name = stage_name
        self.original_error = original_error
