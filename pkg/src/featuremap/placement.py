"""Connected tissue components and their centered placement in a map."""

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import ndimage

from src.utils.exceptions import MapOverflowError, ValidationError
from src.utils.logger import logger

GridPos = Tuple[int, int]
Cell = Tuple[int, int]
MapSize = Union[int, Tuple[int, int]]

_EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)


def as_map_shape(map_size: MapSize) -> Tuple[int, int]:
    if isinstance(map_size, int):
        map_size = (map_size, map_size)
    height, width = (int(v) for v in map_size)
    if height < 1 or width < 1:
        raise ValidationError(f"map size must be positive, got {map_size}")
    return height, width


@dataclass(frozen=True)
class Placement:
    """Mapping of a component's grid positions onto map cells.

    A position ``p`` lands on cell ``p - origin + offset``.

    Attributes:
        origin: Top-left grid position of the component's bounding box
        offset: Cell that receives ``origin``
        map_shape: Map extents (rows, cols)
        positions: Placed grid positions, in input order
        dropped: Positions that fell outside the map (crop mode only)
    """

    origin: GridPos
    offset: Tuple[int, int]
    map_shape: Tuple[int, int]
    positions: Tuple[GridPos, ...]
    dropped: Tuple[GridPos, ...] = ()
    _lookup: Dict[Cell, GridPos] = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "_lookup", {self.cell_of(p): p for p in self.positions})

    def cell_of(self, grid_pos: GridPos) -> Cell:
        return (
            grid_pos[0] - self.origin[0] + self.offset[0],
            grid_pos[1] - self.origin[1] + self.offset[1],
        )

    def cell_to_patch(self, cell: Cell) -> Optional[GridPos]:
        return self._lookup.get((int(cell[0]), int(cell[1])))

    @property
    def occupancy(self) -> np.ndarray:
        occupied = np.zeros(self.map_shape, dtype=bool)
        for row, col in self._lookup:
            occupied[row, col] = True
        return occupied

    def cell_indices(self) -> Tuple[np.ndarray, np.ndarray]:
        """Row and column arrays of the placed positions, in ``positions`` order."""
        cells = [self.cell_of(p) for p in self.positions]
        rows = np.array([c[0] for c in cells], dtype=np.intp)
        cols = np.array([c[1] for c in cells], dtype=np.intp)
        return rows, cols

    def to_dict(self) -> dict:
        return {
            "origin": list(self.origin),
            "offset": list(self.offset),
            "map_shape": list(self.map_shape),
            "positions": [list(p) for p in self.positions],
            "dropped": [list(p) for p in self.dropped],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Placement":
        return cls(
            origin=tuple(data["origin"]),
            offset=tuple(data["offset"]),
            map_shape=tuple(data["map_shape"]),
            positions=tuple(tuple(p) for p in data["positions"]),
            dropped=tuple(tuple(p) for p in data.get("dropped", [])),
        )


def cell_to_patch(placement: Placement, cell: Cell) -> Optional[GridPos]:
    """Grid position placed on ``cell``, or None for an unoccupied cell."""
    return placement.cell_to_patch(cell)


def tissue_components(kept_cells: Iterable[GridPos]) -> List[List[GridPos]]:
    """8-connected components of grid positions.

    Components are ordered by their topmost-leftmost cell and list their
    cells in row-major order.
    """
    cells = sorted({(int(r), int(c)) for r, c in kept_cells})
    if not cells:
        return []
    grid = np.zeros((max(r for r, _ in cells) + 1, max(c for _, c in cells) + 1), dtype=bool)
    for row, col in cells:
        grid[row, col] = True
    labeled, _ = ndimage.label(grid, structure=_EIGHT_CONNECTED)

    groups: Dict[int, List[GridPos]] = {}
    for row, col in cells:
        groups.setdefault(int(labeled[row, col]), []).append((row, col))
    return sorted(groups.values(), key=lambda component: component[0])


def place_component(
    positions: Sequence[GridPos], map_size: MapSize, overflow: str = "error"
) -> Placement:
    """Center the bounding box of ``positions`` in the map.

    ``offset = floor((map_extent - bbox_extent) / 2)`` per axis.

    Args:
        positions: Distinct grid positions
        map_size: Map extents
        overflow: ``"error"`` to reject an oversized component, ``"crop"`` to
            drop the positions that fall outside and log a warning

    Raises:
        MapOverflowError: If the bounding box exceeds the map in error mode
        ValidationError: If ``positions`` is empty or repeats a position
    """
    shape = as_map_shape(map_size)
    positions = [(int(r), int(c)) for r, c in positions]
    if not positions:
        raise ValidationError("cannot place an empty component")
    if len(set(positions)) != len(positions):
        raise ValidationError("component repeats a grid position")

    rows = [p[0] for p in positions]
    cols = [p[1] for p in positions]
    origin = (min(rows), min(cols))
    extent = (max(rows) - origin[0] + 1, max(cols) - origin[1] + 1)
    excess = (max(0, extent[0] - shape[0]), max(0, extent[1] - shape[1]))
    if any(excess) and overflow != "crop":
        raise MapOverflowError(
            f"component of {extent[0]}x{extent[1]} cells exceeds the {shape[0]}x{shape[1]} map "
            f"by {excess[0]}x{excess[1]}",
            overflow=excess,
        )

    offset = ((shape[0] - extent[0]) // 2, (shape[1] - extent[1]) // 2)
    placement = Placement(origin, offset, shape, tuple(positions))
    if not any(excess):
        return placement

    inside = []
    outside = []
    for p in positions:
        row, col = placement.cell_of(p)
        (inside if 0 <= row < shape[0] and 0 <= col < shape[1] else outside).append(p)
    logger.warning(
        f"Cropping {len(outside)} cell(s) of a {extent[0]}x{extent[1]} component "
        f"to fit the {shape[0]}x{shape[1]} map"
    )
    return Placement(origin, offset, shape, tuple(inside), tuple(outside))
