"""Binary portable pixmap / graymap I/O."""

from pathlib import Path
from typing import Union

import numpy as np
from PIL import Image

PathLike = Union[str, Path]


def write_ppm(path: PathLike, rgb: np.ndarray) -> None:
    """Write an ``[H, W, 3]`` uint8 raster as P6."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(np.ascontiguousarray(rgb, dtype=np.uint8)).save(path, format="PPM")


def write_pgm(path: PathLike, gray: np.ndarray) -> None:
    """Write an ``[H, W]`` uint8 raster as P5."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(np.ascontiguousarray(gray, dtype=np.uint8)).save(path, format="PPM")


def read_ppm(path: PathLike) -> np.ndarray:
    with Image.open(path) as image:
        return np.asarray(image.convert("RGB"), dtype=np.uint8).copy()


def read_pgm(path: PathLike) -> np.ndarray:
    with Image.open(path) as image:
        return np.asarray(image.convert("L"), dtype=np.uint8).copy()
