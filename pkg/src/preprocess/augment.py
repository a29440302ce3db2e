"""Patch augmentation: random crop, right-angle rotation, flip, color jitter."""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from PIL import Image, ImageEnhance

from src.preprocess.tiling import Patch
from src.utils.config import AugConfig
from src.utils.exceptions import ValidationError
from src.utils.seeding import derive_seed


@dataclass(frozen=True)
class AugmentParams:
    """Concrete draw of every random transform for one patch.

    Attributes:
        offset: Top-left corner of the crop inside the patch
        rotation: Number of counter-clockwise quarter turns (0..3)
        flip: Whether to mirror left-right after rotating
        jitter: Saturation, contrast, brightness and sharpness factors, or
            None when color jitter is off
    """

    offset: Tuple[int, int]
    rotation: int
    flip: bool
    jitter: Optional[Tuple[float, float, float, float]] = None


def sample_params(rng_seed: int, cfg: AugConfig, patch_size: int) -> AugmentParams:
    """Draw the transform parameters for one patch.

    Every draw is taken whether or not its transform is enabled, so toggling
    one transform never changes the others.

    Raises:
        ValidationError: If the crop does not fit the patch
    """
    if cfg.crop_size > patch_size:
        raise ValidationError(f"crop_size {cfg.crop_size} exceeds patch_size {patch_size}")
    rng = np.random.default_rng(rng_seed)
    slack = patch_size - cfg.crop_size
    offset = (int(rng.integers(0, slack + 1)), int(rng.integers(0, slack + 1)))
    rotation = int(rng.integers(0, 4))
    flip = bool(rng.random() < 0.5)
    factors = tuple(float(f) for f in rng.uniform(cfg.jitter_low, cfg.jitter_high, size=4))

    if not cfg.random_crop:
        offset = (slack // 2, slack // 2)
    return AugmentParams(
        offset=offset,
        rotation=rotation if cfg.rotate else 0,
        flip=flip if cfg.flip else False,
        jitter=factors if cfg.color_jitter else None,
    )


def _sharpen_value(image: Image.Image, factor: float) -> Image.Image:
    hue, sat, value = image.convert("HSV").split()
    value = ImageEnhance.Sharpness(value).enhance(factor)
    return Image.merge("HSV", (hue, sat, value)).convert("RGB")


def color_jitter(pixels: np.ndarray, factors: Tuple[float, float, float, float]) -> np.ndarray:
    """Scale saturation, contrast, brightness, then value-channel sharpness."""
    saturation, contrast, brightness, sharpness = factors
    image = Image.fromarray(np.ascontiguousarray(pixels, dtype=np.uint8))
    image = ImageEnhance.Color(image).enhance(saturation)
    image = ImageEnhance.Contrast(image).enhance(contrast)
    image = ImageEnhance.Brightness(image).enhance(brightness)
    image = _sharpen_value(image, sharpness)
    return np.asarray(image, dtype=np.uint8).copy()


def apply_params(pixels: np.ndarray, params: AugmentParams, crop_size: int) -> np.ndarray:
    """Apply a fixed draw to ``[H, W, 3]`` pixels, returning ``[crop, crop, 3]``."""
    y, x = params.offset
    if y + crop_size > pixels.shape[0] or x + crop_size > pixels.shape[1]:
        raise ValidationError(f"crop at {params.offset} of size {crop_size} leaves the patch")
    out = pixels[y:y + crop_size, x:x + crop_size]
    out = np.rot90(out, params.rotation, axes=(0, 1))
    if params.flip:
        out = out[:, ::-1]
    out = np.ascontiguousarray(out)
    if params.jitter is not None:
        out = color_jitter(out, params.jitter)
    return out


def augment(patch: Patch, rng_seed: int, cfg: AugConfig) -> np.ndarray:
    """Augmented ``crop_size`` square of ``patch``; deterministic in ``rng_seed``."""
    params = sample_params(rng_seed, cfg, patch.pixels.shape[0])
    return apply_params(patch.pixels, params, cfg.crop_size)


def patch_seed(seed: int, patch: Patch, epoch: int = 0) -> int:
    """Per-patch seed so augmentation never depends on processing order."""
    return derive_seed(seed, patch.slide_id, patch.grid_pos[0], patch.grid_pos[1], epoch)
