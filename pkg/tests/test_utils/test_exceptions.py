"""Tests for custom exceptions."""

import pytest

from src.utils.exceptions import (
    CheckpointError,
    ConfigurationError,
    DegenerateConfigError,
    DegenerateHistogramError,
    GradientError,
    MapOverflowError,
    NoLabeledCellsError,
    PlacementMismatchError,
    ShapeMismatchError,
    StageExecutionError,
    StageInputError,
    TensorFormatError,
    TileSegException,
    ValidationError,
)


class TestCustomExceptions:
    """Test custom exception classes."""

    def test_base_exception(self):
        """Test TileSegException base class."""
        exc = TileSegException("Test error")
        assert str(exc) == "Test error"
        assert isinstance(exc, Exception)

    @pytest.mark.parametrize(
        "exc_class",
        [
            ShapeMismatchError,
            DegenerateHistogramError,
            DegenerateConfigError,
            NoLabeledCellsError,
            PlacementMismatchError,
        ],
    )
    def test_validation_family(self, exc_class):
        """Test input-precondition errors share ValidationError."""
        assert issubclass(exc_class, ValidationError)

    def test_map_overflow(self):
        """Test MapOverflowError carries the excess per axis."""
        exc = MapOverflowError("too big", overflow=(1, 3))
        assert exc.overflow == (1, 3)
        assert MapOverflowError("too big").overflow == (0, 0)

    def test_stage_input_error(self):
        """Test StageInputError lists the missing paths in its message."""
        exc = StageInputError("needs checkpoints", ["a.tns", "b.tns"])
        assert exc.missing == ["a.tns", "b.tns"]
        assert str(exc) == "needs checkpoints: a.tns, b.tns"
        assert StageInputError("plain").missing == []

    def test_stage_execution_error(self):
        """Test StageExecutionError."""
        original = NoLabeledCellsError("no labeled cells")
        exc = StageExecutionError("train-seg", "failed", original)

        assert exc.stage_name == "train-seg"
        assert exc.original_error is original
        assert "train-seg" in str(exc)

    def test_exception_inheritance(self):
        """Test that all custom exceptions inherit from TileSegException."""
        for exc_class in (
            ConfigurationError,
            ValidationError,
            GradientError,
            MapOverflowError,
            CheckpointError,
            TensorFormatError,
            StageInputError,
            StageExecutionError,
        ):
            assert issubclass(exc_class, TileSegException)
