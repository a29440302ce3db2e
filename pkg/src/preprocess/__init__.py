"""Tissue detection, tiling, labeling and augmentation of slides."""

from src.preprocess.otsu import otsu_threshold
from src.preprocess.tiling import (
    Patch,
    PatchLabel,
    TissueMask,
    extract_patches,
    label_patch,
    luminance,
    tile_slide,
    tissue_mask,
)
from src.preprocess.augment import AugmentParams, apply_params, augment, patch_seed, sample_params
from src.preprocess.patch_store import read_patch_store, write_patch_store

__all__ = [
    "otsu_threshold",
    "Patch",
    "PatchLabel",
    "TissueMask",
    "extract_patches",
    "label_patch",
    "luminance",
    "tile_slide",
    "tissue_mask",
    "AugmentParams",
    "apply_params",
    "augment",
    "patch_seed",
    "sample_params",
    "read_patch_store",
    "write_patch_store",
]
