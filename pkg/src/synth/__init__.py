"""Deterministic synthetic slides with pixel-level ground truth."""

from src.synth.generator import AnnotationClass, AnnotationMask, SlideImage, generate_slide
from src.synth.dataset import (
    DatasetManifest,
    generate_dataset,
    load_slide,
    split_counts,
)

__all__ = [
    "AnnotationClass",
    "AnnotationMask",
    "SlideImage",
    "generate_slide",
    "DatasetManifest",
    "generate_dataset",
    "load_slide",
    "split_counts",
]
