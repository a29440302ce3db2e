"""Synthetic slide generator.

A slide is a white canvas with one or more lumps of tissue. Each lump is a
union of random ellipses smoothed by one dilation pass; some lumps host a
tumor region drawn with a darker, hue-shifted base color and a strong
two-pixel checker texture. An optional rim along the tissue border is left
unannotated.
"""

import math
from dataclasses import dataclass
from enum import IntEnum
from typing import Tuple

import numpy as np
from scipy import ndimage

from src.utils.config import SlideGenConfig
from src.utils.exceptions import DegenerateConfigError

NORMAL_BASE = np.array([205.0, 130.0, 175.0])
TUMOR_BASE = np.array([125.0, 55.0, 150.0])
NORMAL_CHECKER = 3.0
TUMOR_CHECKER = 18.0
TEXTURE_NOISE = 6.0


class AnnotationClass(IntEnum):
    """Per-pixel ground truth; values are the graymap codes."""

    BACKGROUND = 0
    TUMOR = 64
    UNANNOTATED = 128
    NORMAL = 255


@dataclass
class SlideImage:
    """RGB raster of one slide."""

    id: str
    rgb: np.ndarray

    @property
    def height(self) -> int:
        return self.rgb.shape[0]

    @property
    def width(self) -> int:
        return self.rgb.shape[1]


@dataclass
class AnnotationMask:
    """Per-pixel ``AnnotationClass`` codes, same extents as the slide."""

    codes: np.ndarray

    def fraction(self, cls: AnnotationClass) -> float:
        return float(np.mean(self.codes == cls))


def _validate(cfg: SlideGenConfig) -> None:
    if cfg.width <= 0 or cfg.height <= 0:
        raise DegenerateConfigError(f"slide extents must be positive, got {cfg.width}x{cfg.height}")
    if cfg.max_lumps < 1:
        raise DegenerateConfigError("max_lumps must be at least 1")
    if cfg.width < 4 * cfg.patch_size or cfg.height < 4 * cfg.patch_size:
        raise DegenerateConfigError(
            f"slide {cfg.width}x{cfg.height} is smaller than 4 patches of {cfg.patch_size}"
        )


def _ellipse(yy, xx, cy, cx, ry, rx, theta) -> np.ndarray:
    dy, dx = yy - cy, xx - cx
    u = dx * math.cos(theta) + dy * math.sin(theta)
    v = -dx * math.sin(theta) + dy * math.cos(theta)
    return (u / rx) ** 2 + (v / ry) ** 2 <= 1.0


def generate_slide(
    seed: int, cfg: SlideGenConfig, slide_id: str = "slide"
) -> Tuple[SlideImage, AnnotationMask]:
    """Generate one slide and its annotation.

    Args:
        seed: Random seed; output is a pure function of (seed, cfg)
        cfg: Generator configuration
        slide_id: Identifier stored on the returned image

    Returns:
        Slide raster and annotation mask

    Raises:
        DegenerateConfigError: On zero extents, zero lumps, or a canvas
            smaller than four patches per side
    """
    _validate(cfg)
    rng = np.random.default_rng(seed)
    height, width = cfg.height, cfg.width
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)

    n_lumps = int(rng.integers(1, cfg.max_lumps + 1))
    grid_cols = math.ceil(math.sqrt(n_lumps))
    grid_rows = math.ceil(n_lumps / grid_cols)
    cell_h, cell_w = height / grid_rows, width / grid_cols
    slots = rng.permutation(grid_rows * grid_cols)[:n_lumps]

    tissue = np.zeros((height, width), dtype=bool)
    tumor = np.zeros((height, width), dtype=bool)
    rgb = np.empty((height, width, 3), dtype=np.float64)
    rgb[:] = 255.0 - rng.integers(0, 6, size=(height, width, 1))

    checker = (((yy // 2) + (xx // 2)) % 2) * 2.0 - 1.0
    structure = np.ones((3, 3), dtype=bool)

    for slot in slots:
        row, col = divmod(int(slot), grid_cols)
        cy = (row + 0.5 + rng.uniform(-0.05, 0.05)) * cell_h
        cx = (col + 0.5 + rng.uniform(-0.05, 0.05)) * cell_w
        ry = cfg.lump_scale * cell_h * rng.uniform(0.85, 1.0)
        rx = cfg.lump_scale * cell_w * rng.uniform(0.85, 1.0)

        lump = _ellipse(yy, xx, cy, cx, ry, rx, rng.uniform(0.0, math.pi))
        for _ in range(2):
            oy, ox = rng.uniform(-0.4, 0.4) * ry, rng.uniform(-0.4, 0.4) * rx
            lump |= _ellipse(yy, xx, cy + oy, cx + ox, ry * rng.uniform(0.5, 0.7),
                             rx * rng.uniform(0.5, 0.7), rng.uniform(0.0, math.pi))
        lump = ndimage.binary_dilation(lump, structure=structure)
        lump &= ~tissue

        base = NORMAL_BASE + rng.integers(-12, 13, size=3)
        rgb[lump] = base + NORMAL_CHECKER * checker[lump][:, None]
        tissue |= lump

        has_tumor = rng.random() < cfg.tumor_fraction
        ty = cy + rng.uniform(-0.3, 0.3) * ry
        tx = cx + rng.uniform(-0.3, 0.3) * rx
        region = _ellipse(yy, xx, ty, tx, ry * rng.uniform(0.3, 0.5), rx * rng.uniform(0.3, 0.5),
                          rng.uniform(0.0, math.pi))
        tumor_base = TUMOR_BASE + rng.integers(-8, 9, size=3)
        if has_tumor:
            region &= lump
            rgb[region] = tumor_base + TUMOR_CHECKER * checker[region][:, None]
            tumor |= region

    noise = rng.normal(0.0, TEXTURE_NOISE, size=(height, width, 3))
    rgb[tissue] += noise[tissue]

    codes = np.full((height, width), AnnotationClass.BACKGROUND, dtype=np.uint8)
    codes[tissue] = AnnotationClass.NORMAL
    codes[tumor] = AnnotationClass.TUMOR

    rim_px = int(round(cfg.unannotated_rim * cfg.patch_size))
    if rim_px > 0 and tissue.any():
        depth = ndimage.distance_transform_edt(tissue)
        codes[tissue & (depth <= rim_px)] = AnnotationClass.UNANNOTATED

    slide = SlideImage(slide_id, np.clip(np.rint(rgb), 0, 255).astype(np.uint8))
    return slide, AnnotationMask(codes)
