"""Utilities for tileseg."""

from src.utils.config import (
    config,
    Config,
    RunConfig,
    load_run_config,
)
from src.utils.logger import logger, setup_logger
from src.utils.seeding import derive_seed
from src.utils.exceptions import (
    TileSegException,
    ConfigurationError,
    ValidationError,
    ShapeMismatchError,
    GradientError,
    DegenerateHistogramError,
    DegenerateConfigError,
    NoLabeledCellsError,
    MapOverflowError,
    PlacementMismatchError,
    CheckpointError,
    TensorFormatError,
    StageInputError,
    StageExecutionError,
)

__all__ = [
    # Config
    'config',
    'Config',
    'RunConfig',
    'load_run_config',

    # Logging
    'logger',
    'setup_logger',

    # Seeding
    'derive_seed',

    # Exceptions
    'TileSegException',
    'ConfigurationError',
    'ValidationError',
    'ShapeMismatchError',
    'GradientError',
    'DegenerateHistogramError',
    'DegenerateConfigError',
    'NoLabeledCellsError',
    'MapOverflowError',
    'PlacementMismatchError',
    'CheckpointError',
    'TensorFormatError',
    'StageInputError',
    'StageExecutionError',
]
