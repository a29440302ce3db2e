"""Heatmap rendering of prediction maps."""

from pathlib import Path
from typing import Optional, Union

import numpy as np

from src.featuremap.maps import NORMAL, TUMOR, LabelMap
from src.synth.generator import SlideImage
from src.synth.raster_io import write_ppm
from src.training.predict import PredictionMap
from src.utils.exceptions import PlacementMismatchError

RED = np.array([255, 0, 0], dtype=np.int64)
GRAY = np.array([128, 128, 128], dtype=np.int64)
PURPLE = np.array([128, 0, 128], dtype=np.int64)
WHITE = np.array([255, 255, 255], dtype=np.int64)


class HeatmapTool:
    """Colors prediction maps cell by cell.

    Tumor-predicted cells are red, normal-predicted cells gray, cells whose
    ground truth is NoLabel are blended half-way with purple, and unoccupied
    cells stay white. Every cell becomes a ``scale x scale`` block.
    """

    def __init__(self, scale: int = 8, threshold: float = 0.5):
        self.scale = scale
        self.threshold = threshold

    def _upscale(self, cells: np.ndarray) -> np.ndarray:
        return np.repeat(np.repeat(cells, self.scale, axis=0), self.scale, axis=1).astype(np.uint8)

    def prediction_panel(self, pred: PredictionMap, truth: LabelMap) -> np.ndarray:
        if pred.placement != truth.placement:
            raise PlacementMismatchError("prediction and label maps use different placements")
        cells = np.empty(pred.map_shape + (3,), dtype=np.int64)
        cells[:] = WHITE
        tumor = pred.valid & (pred.probabilities >= self.threshold)
        normal = pred.valid & ~tumor
        cells[tumor] = RED
        cells[normal] = GRAY
        blend = pred.valid & truth.nolabel
        cells[blend] = (cells[blend] + PURPLE) // 2
        return self._upscale(cells)

    def truth_panel(self, truth: LabelMap) -> np.ndarray:
        cells = np.empty(truth.codes.shape + (3,), dtype=np.int64)
        cells[:] = WHITE
        cells[truth.codes == TUMOR] = RED
        cells[truth.codes == NORMAL] = GRAY
        cells[truth.nolabel] = PURPLE
        return self._upscale(cells)

    def slide_panel(self, slide: SlideImage, truth: LabelMap, patch_size: int) -> np.ndarray:
        """The slide's patches, box-downsampled into their map cells."""
        placement = truth.placement
        cells = np.empty(placement.map_shape + (3,), dtype=np.int64)
        cells[:] = WHITE
        for position in placement.positions:
            row, col = placement.cell_of(position)
            y, x = position[0] * patch_size, position[1] * patch_size
            window = slide.rgb[y:y + patch_size, x:x + patch_size]
            cells[row, col] = window.reshape(-1, 3).mean(axis=0)
        return self._upscale(cells)

    def render(
        self,
        pred: PredictionMap,
        truth: LabelMap,
        slide: Optional[SlideImage] = None,
        patch_size: int = 64,
        with_truth: bool = False,
    ) -> np.ndarray:
        """``[Hm*scale, k*Wm*scale, 3]`` image; k counts the optional side panels.

        Raises:
            PlacementMismatchError: If ``pred`` and ``truth`` were placed differently
        """
        panels = [self.prediction_panel(pred, truth)]
        if with_truth:
            panels.append(self.truth_panel(truth))
        if slide is not None:
            panels.append(self.slide_panel(slide, truth, patch_size))
        return np.concatenate(panels, axis=1)

    def execute(
        self, path: Union[str, Path], pred: PredictionMap, truth: LabelMap, **kwargs
    ) -> Path:
        """Render and write a binary PPM."""
        image = self.render(pred, truth, **kwargs)
        write_ppm(path, image)
        return Path(path)
