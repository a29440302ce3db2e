"""Tissue detection, non-overlapping tiling and patch labeling."""

from dataclasses import dataclass
from enum import IntEnum
from typing import List, Tuple

import numpy as np

from src.preprocess.otsu import otsu_threshold
from src.synth.generator import AnnotationClass, AnnotationMask, SlideImage
from src.utils.config import PreprocessConfig
from src.utils.exceptions import ValidationError

GridPos = Tuple[int, int]


class PatchLabel(IntEnum):
    """Patch labels; NORMAL and TUMOR double as class indices of the 2-way heads."""

    NORMAL = 0
    TUMOR = 1
    NOLABEL = 2


@dataclass
class TissueMask:
    """Boolean tissue raster and the threshold that produced it."""

    mask: np.ndarray
    threshold_used: int


@dataclass
class Patch:
    """A ``patch_size`` square tile at ``grid_pos`` (in patch units)."""

    pixels: np.ndarray
    grid_pos: GridPos
    label: PatchLabel
    slide_id: str


def luminance(rgb: np.ndarray) -> np.ndarray:
    """``0.299 R + 0.587 G + 0.114 B`` rounded half up, as uint8."""
    rgb = rgb.astype(np.int64)
    weighted = 299 * rgb[..., 0] + 587 * rgb[..., 1] + 114 * rgb[..., 2]
    return ((weighted + 500) // 1000).astype(np.uint8)


def tissue_mask(slide: SlideImage) -> TissueMask:
    """Otsu-separate tissue (darker) from the near-white background.

    Raises:
        DegenerateHistogramError: If the slide has a single luminance value
    """
    lum = luminance(slide.rgb)
    threshold = otsu_threshold(np.bincount(lum.reshape(-1), minlength=256))
    return TissueMask(lum <= threshold, threshold)


def extract_patches(
    slide: SlideImage, mask: TissueMask, patch_size: int, tissue_frac: float = 0.8
) -> List[GridPos]:
    """Grid positions of kept tiles in row-major order.

    The grid is anchored at pixel (0, 0); partial edge cells are dropped and
    a cell is kept iff its tissue fraction is strictly above ``tissue_frac``.
    """
    if patch_size < 1 or patch_size > min(slide.height, slide.width):
        raise ValidationError(
            f"patch_size {patch_size} does not fit slide {slide.height}x{slide.width}"
        )
    rows, cols = slide.height // patch_size, slide.width // patch_size
    cells = mask.mask[: rows * patch_size, : cols * patch_size]
    counts = cells.reshape(rows, patch_size, cols, patch_size).sum(axis=(1, 3))
    keep = counts > tissue_frac * patch_size * patch_size
    return [(int(r), int(c)) for r, c in zip(*np.nonzero(keep))]


def label_patch(
    window: np.ndarray, tumor_frac: float = 0.2, normal_frac: float = 0.8
) -> PatchLabel:
    """Label a tile from its annotation codes; the tumor rule is tested first."""
    size = window.size
    if np.count_nonzero(window == AnnotationClass.TUMOR) > tumor_frac * size:
        return PatchLabel.TUMOR
    if np.count_nonzero(window == AnnotationClass.NORMAL) > normal_frac * size:
        return PatchLabel.NORMAL
    return PatchLabel.NOLABEL


def tile_slide(slide: SlideImage, annotation: AnnotationMask, cfg: PreprocessConfig) -> List[Patch]:
    """Cut the labeled patches of one slide."""
    ps = cfg.patch_size
    patches = []
    for row, col in extract_patches(slide, tissue_mask(slide), ps, cfg.tissue_frac):
        y, x = row * ps, col * ps
        label = label_patch(annotation.codes[y:y + ps, x:x + ps], cfg.tumor_frac, cfg.normal_frac)
        patches.append(Patch(slide.rgb[y:y + ps, x:x + ps].copy(), (row, col), label, slide.id))
    return patches
