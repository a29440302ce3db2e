"""Feature maps, label maps and the per-slide map layout."""

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from src.featuremap.placement import (
    GridPos,
    MapSize,
    Placement,
    as_map_shape,
    place_component,
    tissue_components,
)
from src.preprocess.tiling import Patch, PatchLabel
from src.utils.config import FeatureMapConfig
from src.utils.exceptions import PlacementMismatchError, ShapeMismatchError

TUMOR = 1
NORMAL = 0
IGNORE = -1


@dataclass
class FeatureMap:
    """Zero-padded map of feature vectors.

    Attributes:
        data: ``[D, Hm, Wm]``; unoccupied cells are zero in every channel
        placement: Where each source patch landed
    """

    data: np.ndarray
    placement: Placement

    @property
    def depth(self) -> int:
        return self.data.shape[0]

    @property
    def occupancy(self) -> np.ndarray:
        return self.placement.occupancy


@dataclass
class LabelMap:
    """Per-cell targets: ``TUMOR``, ``NORMAL`` or ``IGNORE``.

    ``nolabel`` marks occupied cells whose patch carried no label; they are
    ignored by losses and metrics but drawn differently in heatmaps.
    """

    codes: np.ndarray
    nolabel: np.ndarray
    placement: Placement

    @property
    def mask(self) -> np.ndarray:
        return self.codes != IGNORE

    @property
    def targets(self) -> np.ndarray:
        """Class indices with ignored cells set to ``NORMAL``; read only where ``mask``."""
        return np.where(self.mask, self.codes, NORMAL).astype(np.int64)


def _label_code(label: PatchLabel) -> int:
    if label == PatchLabel.TUMOR:
        return TUMOR
    if label == PatchLabel.NORMAL:
        return NORMAL
    return IGNORE


def assemble_feature_map(
    features: Sequence[Tuple[GridPos, np.ndarray]],
    map_size: MapSize,
    overflow: str = "error",
) -> FeatureMap:
    """Write feature vectors of one component into a centered zero map.

    Raises:
        MapOverflowError: If the component does not fit and overflow is ``"error"``
    """
    vectors = [np.asarray(v) for _, v in features]
    depth = vectors[0].shape[0] if vectors else 0
    if any(v.shape != (depth,) for v in vectors):
        raise ShapeMismatchError("feature vectors must share one depth")
    placement = place_component([p for p, _ in features], map_size, overflow)

    by_position = {tuple(p): v for (p, _), v in zip(features, vectors)}
    data = np.zeros((depth,) + placement.map_shape, dtype=vectors[0].dtype)
    for position in placement.positions:
        row, col = placement.cell_of(position)
        data[:, row, col] = by_position[position]
    return FeatureMap(data, placement)


def assemble_label_map(
    labels: Sequence[Tuple[GridPos, PatchLabel]],
    map_size: MapSize,
    placement: Placement,
) -> LabelMap:
    """Place patch labels with the placement of the matching feature map.

    NoLabel patches and empty cells become ``IGNORE``.

    Raises:
        PlacementMismatchError: If ``map_size`` or any position disagrees with ``placement``
    """
    shape = as_map_shape(map_size)
    if shape != tuple(placement.map_shape):
        raise PlacementMismatchError(f"label map {shape} vs placement {placement.map_shape}")
    placed = set(placement.positions)
    dropped = set(placement.dropped)

    codes = np.full(shape, IGNORE, dtype=np.int8)
    nolabel = np.zeros(shape, dtype=bool)
    for position, label in labels:
        position = (int(position[0]), int(position[1]))
        if position in dropped:
            continue
        if position not in placed:
            raise PlacementMismatchError(f"grid position {position} is not part of the placement")
        row, col = placement.cell_of(position)
        codes[row, col] = _label_code(label)
        nolabel[row, col] = label == PatchLabel.NOLABEL
    return LabelMap(codes, nolabel, placement)


@dataclass
class MapLayout:
    """How one slide's patches (in grid order) land in its feature maps.

    Attributes:
        slide_id: Source slide
        positions: Grid positions of all kept patches, row-major
        placements: One placement per map
        map_index: Map of each patch, -1 if cropped away
        rows: Cell row of each patch (undefined where ``map_index`` is -1)
        cols: Cell column of each patch
    """

    slide_id: str
    positions: List[GridPos]
    placements: List[Placement]
    map_index: np.ndarray
    rows: np.ndarray
    cols: np.ndarray

    @property
    def n_maps(self) -> int:
        return len(self.placements)

    @property
    def map_shape(self) -> Tuple[int, int]:
        return self.placements[0].map_shape

    @property
    def placed(self) -> np.ndarray:
        return self.map_index >= 0

    def scatter_targets(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(map_index, row, col)`` of the placed patches, for ``scatter_cells``."""
        keep = self.placed
        return self.map_index[keep], self.rows[keep], self.cols[keep]

    def feature_maps(self, features: np.ndarray) -> np.ndarray:
        """Stack ``[n_maps, D, Hm, Wm]`` from per-patch rows ``[N, D]``."""
        if features.shape[0] != len(self.positions):
            raise ShapeMismatchError(
                f"{features.shape[0]} feature rows for {len(self.positions)} patches"
            )
        out = np.zeros((self.n_maps, features.shape[1]) + self.map_shape, dtype=features.dtype)
        index, rows, cols = self.scatter_targets()
        out[index, :, rows, cols] = features[self.placed]
        return out

    def label_maps(self, labels: Sequence[PatchLabel]) -> List[LabelMap]:
        if len(labels) != len(self.positions):
            raise ShapeMismatchError(f"{len(labels)} labels for {len(self.positions)} patches")
        grouped: List[List[Tuple[GridPos, PatchLabel]]] = [[] for _ in self.placements]
        for k, (position, label) in enumerate(zip(self.positions, labels)):
            if self.map_index[k] >= 0:
                grouped[self.map_index[k]].append((position, label))
        return [
            assemble_label_map(group, placement.map_shape, placement)
            for group, placement in zip(grouped, self.placements)
        ]


def build_layout(slide_id: str, positions: Sequence[GridPos], cfg: FeatureMapConfig) -> MapLayout:
    """Place a slide's patches: one map per tissue lump, or one for the slide.

    Raises:
        MapOverflowError: If a component does not fit and ``cfg.overflow`` is ``"error"``
    """
    positions = [(int(r), int(c)) for r, c in positions]
    groups = tissue_components(positions) if cfg.per_lump else [sorted(positions)]
    groups = [g for g in groups if g]

    placements = [place_component(group, cfg.map_size, cfg.overflow) for group in groups]
    where = {}
    for m, placement in enumerate(placements):
        for position in placement.positions:
            where[position] = (m,) + placement.cell_of(position)

    map_index = np.full(len(positions), -1, dtype=np.intp)
    rows = np.zeros(len(positions), dtype=np.intp)
    cols = np.zeros(len(positions), dtype=np.intp)
    for k, position in enumerate(positions):
        if position in where:
            map_index[k], rows[k], cols[k] = where[position]
    return MapLayout(slide_id, positions, placements, map_index, rows, cols)


def label_maps_for(
    slide_id: str, patches: Sequence[Patch], cfg: FeatureMapConfig
) -> List[LabelMap]:
    """Label maps of a slide, placed exactly as its feature maps are."""
    layout = build_layout(slide_id, [p.grid_pos for p in patches], cfg)
    return layout.label_maps([p.label for p in patches])
