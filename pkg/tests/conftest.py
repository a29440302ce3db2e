"""Pytest configuration and shared fixtures."""
import numpy as np
import pytest

from src.autodiff import get_default_dtype, set_default_dtype
from src.featuremap.maps import build_layout
from src.models.extractor import normalize_pixels
from src.models.params import init_params
from src.preprocess.tiling import PatchLabel, tile_slide
from src.synth.generator import generate_slide
from src.training.data import SlideInputs
from src.utils.config import (
    ArchConfig,
    FeatureMapConfig,
    PreprocessConfig,
    RunConfig,
    SlideGenConfig,
    TrainConfig,
    build_run_config,
)


@pytest.fixture(autouse=True)
def float64_tensors():
    """Every test runs in 64-bit oracle mode unless it switches explicitly."""
    previous = get_default_dtype()
    set_default_dtype(np.float64)
    yield
    set_default_dtype(previous)


@pytest.fixture
def toy_arch():
    """Smallest composite: 8x8 crops, one conv stage, depth-1 segmentation over 4x4 maps."""
    return ArchConfig(
        crop_size=8,
        conv_channels=(4,),
        kernel_size=3,
        feature_dim=4,
        seg_channels=(8,),
        seg_bottleneck=16,
        map_size=4,
    )


@pytest.fixture
def toy_params(toy_arch):
    """Extractor and segmentation parameters drawn from seed 0."""
    return init_params(0, toy_arch)


@pytest.fixture
def whole_slide_map():
    """One 4x4 map per slide."""
    return FeatureMapConfig(per_lump=False, slide_map_size=4)


def _slide_inputs(seed, grid, map_cfg, crop=8, nolabel_frac=0.25, slide_id="toy"):
    rng = np.random.default_rng(seed)
    positions = [(r, c) for r in range(grid) for c in range(grid)]
    pixels = rng.integers(0, 256, size=(len(positions), crop, crop, 3), dtype=np.uint8)
    draws = rng.random(len(positions))
    labels = [
        PatchLabel.NOLABEL if d < nolabel_frac
        else PatchLabel.TUMOR if d < (1 + nolabel_frac) / 2
        else PatchLabel.NORMAL
        for d in draws
    ]
    labels[0], labels[-1] = PatchLabel.TUMOR, PatchLabel.NORMAL
    layout = build_layout(slide_id, positions, map_cfg)
    return SlideInputs(slide_id, normalize_pixels(pixels), layout, labels)


@pytest.fixture
def slide_factory():
    """Builds random normalized patches on a ``grid x grid`` block, labels mixed.

    The first patch is always Tumor and the last Normal.
    """
    return _slide_inputs


@pytest.fixture
def toy_slide(whole_slide_map):
    """Sixteen 8x8 patches filling a 4x4 map."""
    return _slide_inputs(7, 4, whole_slide_map)


@pytest.fixture
def small_gen():
    """Slide generator config small enough for unit tests."""
    return SlideGenConfig(width=256, height=256, patch_size=32, max_lumps=2, n_slides=5)


@pytest.fixture(scope="session")
def default_slides():
    """Default-size slides for seeds 0..9, each with its annotation and tiled patches."""
    cfg = SlideGenConfig()
    slides = []
    for seed in range(10):
        slide, mask = generate_slide(seed, cfg)
        slides.append((slide, mask, tile_slide(slide, mask, PreprocessConfig())))
    return slides


@pytest.fixture
def e2e_train_config():
    """End-to-end config with runtime verification switched on."""
    return TrainConfig(
        e2e_lr_extractor=1e-3,
        e2e_lr_segmentation=1e-3,
        e2e_epochs=1,
        micro_batches=4,
        verify_gradients=True,
    )


@pytest.fixture
def tiny_run_config(tmp_path):
    """Complete run configuration for a five-slide pipeline in a temp directory."""
    values = {
        "seed": "0",
        "gen.width": "256",
        "gen.height": "256",
        "gen.patch_size": "32",
        "gen.max_lumps": "2",
        "gen.n_slides": "5",
        "gen.tumor_fraction": "1.0",
        "preprocess.patch_size": "32",
        "aug.crop_size": "16",
        "arch.crop_size": "16",
        "arch.conv_channels": "4,",
        "arch.feature_dim": "4",
        "arch.seg_channels": "8,",
        "arch.seg_bottleneck": "8",
        "featuremap.lump_map_size": "8",
        "featuremap.slide_map_size": "8",
        "featuremap.overflow": "crop",
        "train.extractor_epochs": "1",
        "train.segmentation_epochs": "1",
        "train.e2e_epochs": "1",
        "train.batch_size": "32",
        "train.micro_batches": "1",
        "eval.cell_mm": "0.1",
        "paths.out_dir": str(tmp_path / "run"),
    }
    run_config = build_run_config(values)
    assert isinstance(run_config, RunConfig)
    return run_config
