"""Cached per-slide features with a JSON sidecar describing the layout."""

import json
from dataclasses import dataclass
from pathlib import Path
from typing import List, Union

import numpy as np

from src.autodiff.serialization import load_named, save_named
from src.autodiff.tensor import get_default_dtype
from src.featuremap.maps import LabelMap, MapLayout
from src.featuremap.placement import Placement
from src.preprocess.tiling import PatchLabel
from src.utils.exceptions import StageInputError

PathLike = Union[str, Path]


@dataclass
class SlideFeatures:
    """Everything the segmentation stage needs from one slide."""

    layout: MapLayout
    features: np.ndarray
    labels: List[PatchLabel]

    @property
    def slide_id(self) -> str:
        return self.layout.slide_id

    def feature_maps(self) -> np.ndarray:
        return self.layout.feature_maps(self.features)

    def label_maps(self) -> List[LabelMap]:
        return self.layout.label_maps(self.labels)


def round_to_storage(features: np.ndarray) -> np.ndarray:
    """Round through float32 so a reload from the cache is bit-equal."""
    return np.asarray(features, dtype=np.float32).astype(features.dtype)


def cache_paths(cache_dir: PathLike, slide_id: str):
    cache_dir = Path(cache_dir)
    return cache_dir / f"{slide_id}.tns", cache_dir / f"{slide_id}.layout.json"


def save_slide_features(cache_dir: PathLike, item: SlideFeatures) -> None:
    tensor_path, sidecar_path = cache_paths(cache_dir, item.slide_id)
    save_named(
        tensor_path,
        {"features": item.features, "maps": item.feature_maps()},
        {"slide_id": item.slide_id},
    )
    layout = item.layout
    sidecar = {
        "slide_id": item.slide_id,
        "positions": [list(p) for p in layout.positions],
        "labels": [label.name.lower() for label in item.labels],
        "placements": [p.to_dict() for p in layout.placements],
        "map_index": layout.map_index.tolist(),
        "rows": layout.rows.tolist(),
        "cols": layout.cols.tolist(),
        "occupancy": [np.argwhere(p.occupancy).tolist() for p in layout.placements],
    }
    sidecar_path.write_text(json.dumps(sidecar, sort_keys=True) + "\n", encoding="utf-8")


def load_slide_features(cache_dir: PathLike, slide_id: str, dtype=None) -> SlideFeatures:
    """Load one slide's cached features.

    Raises:
        StageInputError: If the tensor file or the sidecar is missing
    """
    tensor_path, sidecar_path = cache_paths(cache_dir, slide_id)
    missing = [str(p) for p in (tensor_path, sidecar_path) if not p.is_file()]
    if missing:
        raise StageInputError(f"feature cache for {slide_id} incomplete", missing)

    _, tensors = load_named(tensor_path)
    sidecar = json.loads(sidecar_path.read_text(encoding="utf-8"))
    layout = MapLayout(
        slide_id=sidecar["slide_id"],
        positions=[tuple(p) for p in sidecar["positions"]],
        placements=[Placement.from_dict(p) for p in sidecar["placements"]],
        map_index=np.asarray(sidecar["map_index"], dtype=np.intp),
        rows=np.asarray(sidecar["rows"], dtype=np.intp),
        cols=np.asarray(sidecar["cols"], dtype=np.intp),
    )
    labels = [PatchLabel[name.upper()] for name in sidecar["labels"]]
    dtype = dtype or get_default_dtype()
    return SlideFeatures(layout, tensors["features"].astype(dtype), labels)
