"""Seeded dataset generation, split assignment and the dataset manifest."""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Tuple, Union

import numpy as np

from src.synth.generator import AnnotationMask, SlideImage, generate_slide
from src.synth.raster_io import read_pgm, read_ppm, write_pgm, write_ppm
from src.utils.config import SlideGenConfig, parse_config_lines
from src.utils.exceptions import StageInputError, ValidationError
from src.utils.logger import logger
from src.utils.seeding import derive_seed

SPLITS = ("train", "val", "test")
MANIFEST_NAME = "manifest.txt"

PathLike = Union[str, Path]


@dataclass
class DatasetManifest:
    """Slide ids with their split, plus what is needed to regenerate them."""

    seed: int
    config: SlideGenConfig
    splits: Dict[str, str] = field(default_factory=dict)

    def ids(self, split: str) -> List[str]:
        return sorted(slide_id for slide_id, s in self.splits.items() if s == split)

    def to_lines(self) -> List[str]:
        lines = [f"seed = {self.seed}"]
        for key, value in self.config.model_dump().items():
            lines.append(f"gen.{key} = {value}")
        for slide_id in sorted(self.splits):
            lines.append(f"slide.{slide_id} = {self.splits[slide_id]}")
        return lines

    def write(self, path: PathLike) -> None:
        Path(path).write_text("\n".join(self.to_lines()) + "\n", encoding="utf-8")

    @classmethod
    def read(cls, path: PathLike) -> "DatasetManifest":
        path = Path(path)
        if not path.is_file():
            raise StageInputError("dataset manifest missing", [str(path)])
        values = parse_config_lines(path.read_text(encoding="utf-8").splitlines(), str(path))
        gen = {k[len("gen."):]: v for k, v in values.items() if k.startswith("gen.")}
        splits = {k[len("slide."):]: v for k, v in values.items() if k.startswith("slide.")}
        return cls(int(values["seed"]), SlideGenConfig.model_validate(gen), splits)


def split_counts(n_slides: int) -> Tuple[int, int, int]:
    """Train/val/test sizes: floor 64% train, floor 20% test, remainder val."""
    train = (64 * n_slides) // 100
    test = (20 * n_slides) // 100
    return train, n_slides - train - test, test


def slide_id_for(index: int) -> str:
    return f"slide_{index:04d}"


def generate_dataset(
    seed: int, n_slides: int, cfg: SlideGenConfig, out_dir: PathLike
) -> DatasetManifest:
    """Generate ``n_slides`` slides with masks and write the manifest.

    Layout under ``out_dir``: ``slides/<id>.ppm``, ``masks/<id>.pgm`` and
    ``manifest.txt``.

    Raises:
        ValidationError: If fewer than five slides are requested
    """
    if n_slides < 5:
        raise ValidationError(f"n_slides must be at least 5, got {n_slides}")
    out_dir = Path(out_dir)

    order = np.random.default_rng(seed).permutation(n_slides)
    n_train, n_val, _ = split_counts(n_slides)
    splits: Dict[str, str] = {}
    for position, index in enumerate(order):
        if position < n_train:
            split = "train"
        elif position < n_train + n_val:
            split = "val"
        else:
            split = "test"
        splits[slide_id_for(int(index))] = split

    for index in range(n_slides):
        slide_id = slide_id_for(index)
        slide, mask = generate_slide(derive_seed(seed, slide_id), cfg, slide_id)
        write_ppm(out_dir / "slides" / f"{slide_id}.ppm", slide.rgb)
        write_pgm(out_dir / "masks" / f"{slide_id}.pgm", mask.codes)
        logger.debug(f"Generated {slide_id} ({splits[slide_id]})")

    manifest = DatasetManifest(seed, cfg, splits)
    manifest.write(out_dir / MANIFEST_NAME)
    logger.info(
        f"Generated {n_slides} slides: "
        + ", ".join(f"{len(manifest.ids(s))} {s}" for s in SPLITS)
    )
    return manifest


def load_slide(dataset_dir: PathLike, slide_id: str) -> Tuple[SlideImage, AnnotationMask]:
    """Read a generated slide and its annotation mask.

    Raises:
        StageInputError: If either file is missing
    """
    dataset_dir = Path(dataset_dir)
    slide_path = dataset_dir / "slides" / f"{slide_id}.ppm"
    mask_path = dataset_dir / "masks" / f"{slide_id}.pgm"
    missing = [str(p) for p in (slide_path, mask_path) if not p.is_file()]
    if missing:
        raise StageInputError(f"slide {slide_id} incomplete", missing)
    return SlideImage(slide_id, read_ppm(slide_path)), AnnotationMask(read_pgm(mask_path))
