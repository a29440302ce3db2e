"""Separate and End-to-End training, and prediction."""

from src.training.data import SlideInputs, load_split_patches, prepare_inputs
from src.training.trace import LossTrace
from src.training.separate import (
    evaluate_segmentation_loss,
    extract_all_features,
    extract_slide_features,
    train_feature_extractor,
    train_segmentation,
)
from src.training.end_to_end import (
    EndToEndRun,
    MemoryReport,
    RetainedBoundary,
    compute_e2e_gradients,
    e2e_step,
    e2e_train,
    micro_batches,
    monolithic_gradients,
    surrogate_loss,
)
from src.training.predict import (
    PredictionMap,
    load_predictions,
    predict,
    predict_patches,
    save_predictions,
)

__all__ = [
    "SlideInputs",
    "load_split_patches",
    "prepare_inputs",
    "LossTrace",
    "evaluate_segmentation_loss",
    "extract_all_features",
    "extract_slide_features",
    "train_feature_extractor",
    "train_segmentation",
    "EndToEndRun",
    "MemoryReport",
    "RetainedBoundary",
    "compute_e2e_gradients",
    "e2e_step",
    "e2e_train",
    "micro_batches",
    "monolithic_gradients",
    "surrogate_loss",
    "PredictionMap",
    "predict",
    "predict_patches",
    "load_predictions",
    "save_predictions",
]
