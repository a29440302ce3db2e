"""Configuration management for tileseg.

Two layers live here. ``Config`` holds process-wide settings read from the
environment (after ``load_dotenv``). ``RunConfig`` holds everything a pipeline
run depends on; it is read from a line-based ``section.key = value`` file,
validated by pydantic and echoed into every stage manifest.
"""

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Literal, Optional, Tuple, Union

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError as PydanticValidationError
from pydantic import model_validator

from src.utils.exceptions import ConfigurationError
from src.utils.logger import logger

load_dotenv()


@dataclass
class Config:
    """Process settings taken from the environment."""

    log_level: str = os.getenv("TILESEG_LOG_LEVEL", "INFO")
    log_dir: str = os.getenv("TILESEG_LOG_DIR", "logs")
    out_dir: str = os.getenv("TILESEG_OUT_DIR", "runs/default")

    # Numerics
    precision: str = os.getenv("TILESEG_PRECISION", "float64")
    debug_checks: bool = os.getenv("TILESEG_DEBUG_CHECKS", "false").lower() == "true"

    def validate(self) -> bool:
        """Validate environment settings.

        Returns:
            True if settings are usable, False otherwise
        """
        problems = []
        if self.precision not in ("float64", "float32"):
            problems.append(f"TILESEG_PRECISION={self.precision!r}")
        if self.log_level.upper() not in ("DEBUG", "INFO", "WARNING", "ERROR"):
            problems.append(f"TILESEG_LOG_LEVEL={self.log_level!r}")

        if problems:
            logger.error(f"Invalid environment settings: {', '.join(problems)}")
            return False

        return True


# Global config instance
config = Config()


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class SlideGenConfig(_Section):
    """Synthetic slide generator settings."""

    width: int = 1024
    height: int = 1024
    patch_size: int = 64
    max_lumps: int = Field(3, ge=0)
    # Fraction of lumps that host a tumor region
    tumor_fraction: float = Field(0.6, ge=0.0, le=1.0)
    # Width of the unannotated tissue rim, in patch sizes
    unannotated_rim: float = Field(0.25, ge=0.0)
    # Lump semi-axis as a fraction of its layout cell
    lump_scale: float = Field(0.42, gt=0.0, le=0.5)
    n_slides: int = 100


class PreprocessConfig(_Section):
    """Tissue detection, tiling and labeling thresholds."""

    patch_size: int = Field(64, ge=1)
    tissue_frac: float = Field(0.8, ge=0.0, le=1.0)
    tumor_frac: float = Field(0.2, ge=0.0, le=1.0)
    normal_frac: float = Field(0.8, ge=0.0, le=1.0)


class AugConfig(_Section):
    """Patch augmentation settings."""

    crop_size: int = Field(56, ge=1)
    random_crop: bool = True
    rotate: bool = True
    flip: bool = True
    color_jitter: bool = True
    jitter_low: float = Field(0.75, gt=0.0)
    jitter_high: float = Field(1.25, gt=0.0)

    @model_validator(mode="after")
    def _check_range(self) -> "AugConfig":
        if self.jitter_low > self.jitter_high:
            raise ValueError("jitter_low must not exceed jitter_high")
        return self

    @classmethod
    def disabled(cls, crop_size: int) -> "AugConfig":
        """Center crop with every random transform switched off."""
        return cls(crop_size=crop_size, random_crop=False, rotate=False, flip=False,
                   color_jitter=False)


class ArchConfig(_Section):
    """Network architecture for both models."""

    crop_size: int = Field(56, ge=1)
    in_channels: int = Field(3, ge=1)
    conv_channels: Tuple[int, ...] = (8, 16, 32)
    kernel_size: int = Field(3, ge=1)
    feature_dim: int = Field(16, ge=1)
    seg_channels: Tuple[int, ...] = (32, 64)
    seg_bottleneck: int = Field(128, ge=1)
    map_size: int = Field(16, ge=1)

    @property
    def seg_depth(self) -> int:
        return len(self.seg_channels)


class FeatureMapConfig(_Section):
    """Feature-map geometry."""

    per_lump: bool = True
    lump_map_size: int = Field(16, ge=1)
    slide_map_size: int = Field(32, ge=1)
    overflow: Literal["error", "crop"] = "error"

    @property
    def map_size(self) -> int:
        return self.lump_map_size if self.per_lump else self.slide_map_size


class TrainConfig(_Section):
    """Optimization settings for Separate and End-to-End learning."""

    lr_extractor: float = Field(1e-4, ge=0.0)
    lr_segmentation: float = Field(1e-4, ge=0.0)
    e2e_lr_extractor: float = Field(1e-9, ge=0.0)
    e2e_lr_segmentation: float = Field(1e-7, ge=0.0)
    extractor_epochs: int = Field(5, ge=0)
    segmentation_epochs: int = Field(50, ge=0)
    e2e_epochs: int = Field(10, ge=0)
    batch_size: int = Field(128, ge=1)
    seg_batch_size: int = Field(32, ge=1)
    micro_batches: int = Field(4, ge=1)
    loss_reduction: Literal["mean", "sum"] = "mean"
    balance_classes: bool = True
    augment: bool = True
    cold_start: bool = False
    verify_gradients: bool = False
    beta1: float = Field(0.9, ge=0.0, lt=1.0)
    beta2: float = Field(0.999, ge=0.0, lt=1.0)
    eps: float = Field(1e-8, gt=0.0)


class EvalConfig(_Section):
    """Metric thresholds and lesion and pN-stage rule tables."""

    threshold: float = Field(0.5, ge=0.0, le=1.0)
    cell_mm: float = Field(0.2, gt=0.0)
    itc_mm: float = Field(0.2, gt=0.0)
    macro_mm: float = Field(2.0, gt=0.0)
    lesion_measure: Literal["extent", "area"] = "extent"
    heatmap_scale: int = Field(8, ge=1)
    heatmap_truth_panel: bool = True
    heatmap_slide_panel: bool = False


class PathsConfig(_Section):
    """Output location of a run.

    A non-empty ``data_dir`` names another run directory whose dataset and
    patches are read instead of this run's own.
    """

    out_dir: str = config.out_dir
    data_dir: str = ""


class RunConfig(_Section):
    """Complete configuration of a pipeline run."""

    seed: int = Field(0, ge=0)
    gen: SlideGenConfig = SlideGenConfig()
    preprocess: PreprocessConfig = PreprocessConfig()
    aug: AugConfig = AugConfig()
    arch: ArchConfig = ArchConfig()
    featuremap: FeatureMapConfig = FeatureMapConfig()
    train: TrainConfig = TrainConfig()
    eval: EvalConfig = EvalConfig()
    paths: PathsConfig = PathsConfig()

    @model_validator(mode="after")
    def _check_consistency(self) -> "RunConfig":
        if self.aug.crop_size > self.preprocess.patch_size:
            raise ValueError("aug.crop_size must not exceed preprocess.patch_size")
        if self.arch.crop_size != self.aug.crop_size:
            raise ValueError("arch.crop_size must equal aug.crop_size")
        return self

    @property
    def out_dir(self) -> Path:
        return Path(self.paths.out_dir)

    @property
    def data_dir(self) -> Path:
        return Path(self.paths.data_dir) if self.paths.data_dir else self.out_dir

    def resolved_arch(self) -> ArchConfig:
        """Architecture with the map size of the active feature-map regime."""
        return self.arch.model_copy(update={"map_size": self.featuremap.map_size})

    def to_lines(self) -> List[str]:
        """Serialize as ``section.key = value`` lines, parseable by ``load_run_config``."""
        lines = [f"seed = {self.seed}"]
        for section in _SECTIONS:
            values = getattr(self, section).model_dump()
            for key, value in values.items():
                lines.append(f"{section}.{key} = {_format_value(value)}")
        return lines


_SECTIONS = ("gen", "preprocess", "aug", "arch", "featuremap", "train", "eval", "paths")


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (tuple, list)):
        joined = ",".join(str(v) for v in value)
        # trailing comma keeps a one-element tuple parseable as a list
        return joined + "," if len(value) == 1 else joined
    return str(value)


def _parse_value(raw: str) -> Union[str, List[str]]:
    raw = raw.strip()
    if "," in raw:
        return [part.strip() for part in raw.split(",") if part.strip()]
    return raw


def parse_config_lines(lines: Iterable[str], source: str = "<config>") -> Dict[str, str]:
    """Parse ``key = value`` lines into a flat dictionary.

    Args:
        lines: Text lines; ``#`` starts a comment, blank lines are skipped
        source: Name used in error messages

    Returns:
        Mapping of dotted keys to raw string values

    Raises:
        ConfigurationError: If a line has no ``=``
    """
    values: Dict[str, str] = {}
    for number, line in enumerate(lines, 1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigurationError(f"{source}:{number}: expected 'key = value', got {line!r}")
        key, value = stripped.split("=", 1)
        values[key.strip()] = value.strip()
    return values


def build_run_config(values: Dict[str, str]) -> RunConfig:
    """Build a validated ``RunConfig`` from flat dotted keys.

    Raises:
        ConfigurationError: On unknown keys or invalid values
    """
    nested: Dict[str, object] = {}
    for key, raw in values.items():
        if key == "seed":
            nested["seed"] = raw
            continue
        section, _, field = key.partition(".")
        if not field or section not in _SECTIONS:
            raise ConfigurationError(f"Unknown config key: {key}")
        nested.setdefault(section, {})[field] = _parse_value(raw)

    try:
        return RunConfig.model_validate(nested)
    except PydanticValidationError as e:
        first = e.errors()[0]
        location = ".".join(str(part) for part in first["loc"])
        raise ConfigurationError(f"Invalid config value for {location}: {first['msg']}") from e


def load_run_config(
    path: Optional[Union[str, Path]] = None,
    overrides: Optional[Iterable[str]] = None,
    seed: Optional[int] = None,
    out_dir: Optional[str] = None,
) -> RunConfig:
    """Load a run configuration file and apply command-line overrides.

    Args:
        path: Config file path; defaults are used when omitted
        overrides: ``key=value`` strings from ``--set``
        seed: Value of ``--seed``, if given
        out_dir: Value of ``--out``, if given

    Returns:
        Validated run configuration

    Raises:
        ConfigurationError: If the file is missing or any value is invalid
    """
    values: Dict[str, str] = {}
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigurationError(f"Config file not found: {path}")
        values.update(parse_config_lines(path.read_text(encoding="utf-8").splitlines(), str(path)))

    values.update(parse_config_lines(overrides or [], "--set"))
    if seed is not None:
        values["seed"] = str(seed)
    if out_dir is not None:
        values["paths.out_dir"] = out_dir

    run_config = build_run_config(values)
    logger.debug(f"Loaded run config with {len(values)} explicit key(s)")
    return run_config
