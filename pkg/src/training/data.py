"""Model inputs built from stored patches."""

from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterator, List, Sequence, Union

import numpy as np

from src.featuremap.maps import IGNORE, MapLayout, build_layout
from src.models.extractor import normalize_pixels
from src.preprocess.augment import AugmentParams, apply_params
from src.preprocess.patch_store import read_patch_store
from src.preprocess.tiling import Patch, PatchLabel
from src.utils.config import FeatureMapConfig
from src.utils.exceptions import ValidationError

PathLike = Union[str, Path]


def center_crop(pixels: np.ndarray, crop_size: int) -> np.ndarray:
    slack = pixels.shape[0] - crop_size
    params = AugmentParams(offset=(slack // 2, slack // 2), rotation=0, flip=False)
    return apply_params(pixels, params, crop_size)


def prepare_inputs(patches: Sequence[Patch], crop_size: int) -> np.ndarray:
    """Center-cropped, normalized ``[B, 3, crop, crop]`` inputs."""
    if not patches:
        return np.zeros((0, 3, crop_size, crop_size))
    return normalize_pixels(np.stack([center_crop(p.pixels, crop_size) for p in patches]))


def chunks(n: int, size: int) -> Iterator[slice]:
    for start in range(0, n, size):
        yield slice(start, min(start + size, n))


def load_split_patches(store_dir: PathLike, slide_ids: Sequence[str]) -> Dict[str, List[Patch]]:
    """Stored patches per slide, in grid order, for the given slides."""
    return {slide_id: read_patch_store(store_dir, slide_id) for slide_id in slide_ids}


@dataclass
class SlideInputs:
    """One slide ready for the end-to-end step or for prediction.

    Attributes:
        slide_id: Source slide
        inputs: Normalized patches ``[N, 3, crop, crop]`` in grid order
        layout: Where each patch lands in the slide's feature maps
        labels: Patch labels in grid order
    """

    slide_id: str
    inputs: np.ndarray
    layout: MapLayout
    labels: List[PatchLabel]

    @classmethod
    def from_patches(
        cls, slide_id: str, patches: Sequence[Patch], fm_cfg: FeatureMapConfig, crop_size: int
    ) -> "SlideInputs":
        if not patches:
            raise ValidationError(f"slide {slide_id} has no patches")
        layout = build_layout(slide_id, [p.grid_pos for p in patches], fm_cfg)
        return cls(slide_id, prepare_inputs(patches, crop_size), layout, [p.label for p in patches])

    @property
    def n_patches(self) -> int:
        return self.inputs.shape[0]

    def cell_targets(self):
        """Flattened ``(targets, mask)`` over all map cells, ``(map, row, col)`` order."""
        label_maps = self.layout.label_maps(self.labels)
        codes = np.stack([m.codes for m in label_maps])
        mask = codes != IGNORE
        return np.where(mask, codes, 0).reshape(-1).astype(np.int64), mask.reshape(-1)

    def has_labeled_cells(self) -> bool:
        return bool(self.cell_targets()[1].any())
