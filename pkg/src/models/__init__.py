"""The patch feature extractor and the segmentation network."""

from src.models.params import (
    EXTRACTOR,
    SEGMENTATION,
    Params,
    arch_fingerprint,
    init_extractor,
    init_params,
    init_segmentation,
    load_checkpoint,
    save_checkpoint,
    validate_arch,
)
from src.models.extractor import (
    extractor_features,
    extractor_forward,
    extractor_head,
    normalize_pixels,
)
from src.models.segmentation import segmentation_forward

__all__ = [
    "EXTRACTOR",
    "SEGMENTATION",
    "Params",
    "arch_fingerprint",
    "init_extractor",
    "init_params",
    "init_segmentation",
    "load_checkpoint",
    "save_checkpoint",
    "validate_arch",
    "extractor_features",
    "extractor_forward",
    "extractor_head",
    "normalize_pixels",
    "segmentation_forward",
]
