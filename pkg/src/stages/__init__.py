"""Pipeline stages, one per CLI subcommand."""

from src.stages.base_stage import BaseStage, RunPaths, StageResult
from src.stages.dataset_stages import PreprocessStage, SynthStage
from src.stages.separate_stages import (
    ExtractFeaturesStage,
    TrainClassifierStage,
    TrainSegmentationStage,
)
from src.stages.end_to_end_stage import TrainEndToEndStage
from src.stages.inference_stages import EvalStage, PredictStage, RenderHeatmapStage

PIPELINE = (
    SynthStage,
    PreprocessStage,
    TrainClassifierStage,
    ExtractFeaturesStage,
    TrainSegmentationStage,
    TrainEndToEndStage,
    PredictStage,
    EvalStage,
    RenderHeatmapStage,
)

STAGES = {stage.command: stage for stage in PIPELINE}

# Repeated runs share the dataset stages and redo the rest up to eval
DATA_STAGES = (SynthStage, PreprocessStage)
REPEATED_STAGES = (
    TrainClassifierStage,
    ExtractFeaturesStage,
    TrainSegmentationStage,
    TrainEndToEndStage,
    PredictStage,
    EvalStage,
)

__all__ = [
    "BaseStage",
    "RunPaths",
    "StageResult",
    "SynthStage",
    "PreprocessStage",
    "TrainClassifierStage",
    "ExtractFeaturesStage",
    "TrainSegmentationStage",
    "TrainEndToEndStage",
    "PredictStage",
    "EvalStage",
    "RenderHeatmapStage",
    "PIPELINE",
    "STAGES",
    "DATA_STAGES",
    "REPEATED_STAGES",
]
