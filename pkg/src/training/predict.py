"""Whole-slide prediction maps from the trained networks."""

from dataclasses import dataclass
from pathlib import Path
from typing import List, Tuple, Union

import numpy as np

from src.autodiff import Tape, Tensor, softmax
from src.autodiff.serialization import load_named, save_named
from src.featuremap.placement import Placement
from src.models.extractor import extractor_forward, extractor_head
from src.models.params import Params
from src.models.segmentation import segmentation_forward
from src.training.data import SlideInputs, chunks
from src.training.separate import batched_features


@dataclass
class PredictionMap:
    """Per-cell tumor probability of one feature map.

    Invalid (unoccupied) cells hold 0 and are excluded from every metric.
    """

    probabilities: np.ndarray
    valid: np.ndarray
    placement: Placement

    @property
    def map_shape(self):
        return self.probabilities.shape


def _empty_maps(slide: SlideInputs) -> List[PredictionMap]:
    return [
        PredictionMap(np.zeros(p.map_shape), p.occupancy, p) for p in slide.layout.placements
    ]


def _scatter_probabilities(slide: SlideInputs, per_patch: np.ndarray) -> List[PredictionMap]:
    maps = _empty_maps(slide)
    layout = slide.layout
    for k in np.flatnonzero(layout.placed):
        maps[layout.map_index[k]].probabilities[layout.rows[k], layout.cols[k]] = per_patch[k]
    return maps


def predict(
    ext: Params, seg: Params, slide: SlideInputs, batch_size: int = 128
) -> List[PredictionMap]:
    """Segmentation tumor probabilities for every map of ``slide``.

    NoLabel patches are predicted like any other occupied cell.
    """
    with Tape(record=False):
        features = batched_features(ext, slide.inputs, batch_size)
        logits = segmentation_forward(seg, Tensor(slide.layout.feature_maps(features))).data
    tumor = softmax(np.moveaxis(logits, 1, -1))[..., 1]

    maps = _empty_maps(slide)
    for m, prediction in enumerate(maps):
        prediction.probabilities[:] = np.where(prediction.valid, tumor[m], 0.0)
    return maps


def predict_patches(ext: Params, slide: SlideInputs, batch_size: int = 128) -> List[PredictionMap]:
    """Classifier-only baseline: the extractor head's tumor probability per patch."""
    probabilities = np.zeros(slide.n_patches)
    with Tape(record=False):
        for batch in chunks(slide.n_patches, batch_size):
            features = extractor_forward(ext, Tensor(slide.inputs[batch]), "features")
            logits = extractor_head(ext, features).data
            probabilities[batch] = softmax(logits)[:, 1]
    return _scatter_probabilities(slide, probabilities)


def save_predictions(path: Union[str, Path], slide_id: str, maps: List[PredictionMap]) -> None:
    """One container per slide: ``prob_<k>`` and ``valid_<k>`` per map, placements in the header."""
    tensors = {}
    for k, prediction in enumerate(maps):
        tensors[f"prob_{k}"] = prediction.probabilities
        tensors[f"valid_{k}"] = prediction.valid.astype(np.float32)
    header = {"slide_id": slide_id, "placements": [m.placement.to_dict() for m in maps]}
    save_named(path, tensors, header)


def load_predictions(path: Union[str, Path]) -> Tuple[str, List[PredictionMap]]:
    header, tensors = load_named(path)
    maps = []
    for k, placement in enumerate(header["placements"]):
        maps.append(
            PredictionMap(
                tensors[f"prob_{k}"].astype(np.float64),
                tensors[f"valid_{k}"] > 0.5,
                Placement.from_dict(placement),
            )
        )
    return header["slide_id"], maps
