"""On-disk patch store: a ``row col label`` index per slide plus a raw pixel blob."""

from pathlib import Path
from typing import List, Union

import numpy as np

from src.preprocess.tiling import Patch, PatchLabel
from src.utils.exceptions import StageInputError, TensorFormatError

PathLike = Union[str, Path]


def write_patch_store(
    store_dir: PathLike, slide_id: str, patches: List[Patch], patch_size: int
) -> None:
    """Write ``<slide_id>.idx`` and ``<slide_id>.bin`` under ``store_dir``.

    The blob holds the patches' uint8 RGB pixels back to back, in index order.
    """
    store_dir = Path(store_dir)
    store_dir.mkdir(parents=True, exist_ok=True)
    lines = [f"# patch_size = {patch_size}"]
    lines += [f"{p.grid_pos[0]} {p.grid_pos[1]} {p.label.name.lower()}" for p in patches]
    (store_dir / f"{slide_id}.idx").write_text("\n".join(lines) + "\n", encoding="utf-8")
    with open(store_dir / f"{slide_id}.bin", "wb") as f:
        for patch in patches:
            f.write(np.ascontiguousarray(patch.pixels, dtype=np.uint8).tobytes())


def read_patch_store(store_dir: PathLike, slide_id: str) -> List[Patch]:
    """Read back the patches of one slide.

    Raises:
        StageInputError: If the index or blob is missing
        TensorFormatError: If the blob size disagrees with the index
    """
    store_dir = Path(store_dir)
    index_path = store_dir / f"{slide_id}.idx"
    blob_path = store_dir / f"{slide_id}.bin"
    missing = [str(p) for p in (index_path, blob_path) if not p.is_file()]
    if missing:
        raise StageInputError(f"patch store for {slide_id} incomplete", missing)

    lines = index_path.read_text(encoding="utf-8").splitlines()
    patch_size = int(lines[0].split("=", 1)[1])
    entries = [line.split() for line in lines[1:] if line.strip()]

    blob = np.fromfile(blob_path, dtype=np.uint8)
    per_patch = patch_size * patch_size * 3
    if blob.size != per_patch * len(entries):
        raise TensorFormatError(
            f"{blob_path}: {blob.size} bytes for {len(entries)} patches of {patch_size}"
        )
    pixels = blob.reshape(len(entries), patch_size, patch_size, 3)
    return [
        Patch(pixels[i].copy(), (int(row), int(col)), PatchLabel[label.upper()], slide_id)
        for i, (row, col, label) in enumerate(entries)
    ]
