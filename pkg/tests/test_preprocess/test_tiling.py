"""Tests for Otsu thresholding, tissue detection, tiling and labeling."""

from fractions import Fraction

import numpy as np
import pytest

from src.preprocess.otsu import otsu_threshold
from src.preprocess.tiling import (
    PatchLabel,
    TissueMask,
    extract_patches,
    label_patch,
    luminance,
    tile_slide,
    tissue_mask,
)
from src.synth.generator import AnnotationClass, SlideImage, generate_slide
from src.utils.config import PreprocessConfig
from src.utils.exceptions import DegenerateHistogramError, ValidationError


def exhaustive_otsu(histogram):
    """Reference: scan every threshold with exact rational arithmetic."""
    total = sum(histogram)
    mass = sum(i * c for i, c in enumerate(histogram))
    best_t, best_score = None, Fraction(-1)
    n0 = s0 = 0
    for t in range(256):
        n0 += histogram[t]
        s0 += t * histogram[t]
        n1 = total - n0
        if n0 == 0 or n1 == 0:
            continue
        mu0 = Fraction(s0, n0)
        mu1 = Fraction(mass - s0, n1)
        score = Fraction(n0 * n1, total * total) * (mu0 - mu1) ** 2
        if score > best_score:
            best_t, best_score = t, score
    return best_t


def _window(**fractions):
    """100-pixel annotation window with the given class fractions (in percent)."""
    codes = []
    for name, percent in fractions.items():
        codes += [AnnotationClass[name.upper()]] * percent
    codes += [AnnotationClass.BACKGROUND] * (100 - len(codes))
    return np.array(codes, dtype=np.uint8).reshape(10, 10)


class TestOtsu:
    """Test Otsu threshold selection."""

    def test_matches_exhaustive_scan(self):
        """Test exact agreement with the exhaustive scan on 1,000 random histograms."""
        rng = np.random.default_rng(0)
        for trial in range(1000):
            occupied = rng.integers(2, 40)
            bins = rng.choice(256, size=occupied, replace=False)
            histogram = [0] * 256
            for b in bins:
                histogram[int(b)] = int(rng.integers(1, 6 if trial % 2 else 1000))
            assert otsu_threshold(histogram) == exhaustive_otsu(histogram)

    def test_half_black_half_white(self):
        """Test a two-level histogram splits at the lowest maximizing threshold."""
        histogram = np.zeros(256, dtype=np.int64)
        histogram[0] = histogram[255] = 500
        assert otsu_threshold(histogram) == 0

    def test_two_clusters(self):
        """Test the threshold falls between two separated clusters."""
        histogram = np.zeros(256, dtype=np.int64)
        histogram[40:60] = 10
        histogram[200:220] = 10
        assert 59 <= otsu_threshold(histogram) < 200

    def test_degenerate(self):
        """Test a single occupied bin is rejected."""
        histogram = np.zeros(256, dtype=np.int64)
        histogram[17] = 9
        with pytest.raises(DegenerateHistogramError):
            otsu_threshold(histogram)

    def test_wrong_length(self):
        """Test histograms must have 256 bins."""
        with pytest.raises(ValidationError):
            otsu_threshold([1, 2, 3])


class TestTissueMask:
    """Test luminance and tissue detection."""

    def test_luminance_rounding(self):
        """Test BT.601 weights with half-up rounding."""
        rgb = np.array([[[255, 255, 255], [0, 0, 0], [255, 0, 0], [1, 1, 1]]], dtype=np.uint8)
        assert luminance(rgb).tolist() == [[255, 0, 76, 1]]

    def test_covers_annotated_tissue(self, small_gen):
        """Test the mask covers at least 99% of non-background annotation pixels."""
        for seed in range(3):
            slide, annotation = generate_slide(seed, small_gen)
            mask = tissue_mask(slide)
            annotated = annotation.codes != AnnotationClass.BACKGROUND
            assert mask.mask.shape == annotated.shape
            assert np.mean(mask.mask[annotated]) >= 0.99

    def test_uniform_slide(self):
        """Test a single-color slide has no usable threshold."""
        slide = SlideImage("flat", np.full((64, 64, 3), 255, dtype=np.uint8))
        with pytest.raises(DegenerateHistogramError):
            tissue_mask(slide)


class TestExtractPatches:
    """Test grid tiling."""

    def test_four_patches(self):
        """Test a 512x512 all-tissue slide yields four 256-pixel patches."""
        slide = SlideImage("s", np.zeros((512, 512, 3), dtype=np.uint8))
        mask = TissueMask(np.ones((512, 512), dtype=bool), 0)
        assert extract_patches(slide, mask, 256) == [(0, 0), (0, 1), (1, 0), (1, 1)]

    def test_exactly_eighty_percent_excluded(self):
        """Test the tissue fraction must be strictly above the threshold."""
        slide = SlideImage("s", np.zeros((10, 20, 3), dtype=np.uint8))
        tissue = np.zeros((10, 20), dtype=bool)
        tissue[:8, :10] = True
        tissue[:8, 10:] = True
        tissue[8, 10] = True
        positions = extract_patches(slide, TissueMask(tissue, 0), 10, 0.8)
        assert positions == [(0, 1)]

    def test_partial_cells_dropped(self):
        """Test edge cells that do not fit are discarded."""
        slide = SlideImage("s", np.zeros((25, 35, 3), dtype=np.uint8))
        mask = TissueMask(np.ones((25, 35), dtype=bool), 0)
        assert len(extract_patches(slide, mask, 10)) == 2 * 3

    def test_background_only(self):
        """Test an all-background slide yields no patches."""
        slide = SlideImage("s", np.zeros((64, 64, 3), dtype=np.uint8))
        assert extract_patches(slide, TissueMask(np.zeros((64, 64), dtype=bool), 0), 16) == []

    def test_patch_larger_than_slide(self):
        """Test a patch size beyond the slide extents is rejected."""
        slide = SlideImage("s", np.zeros((8, 8, 3), dtype=np.uint8))
        with pytest.raises(ValidationError):
            extract_patches(slide, TissueMask(np.ones((8, 8), dtype=bool), 0), 16)


class TestLabelPatch:
    """Test patch labeling rules."""

    @pytest.mark.parametrize(
        "fractions,expected",
        [
            ({"tumor": 25, "normal": 75}, PatchLabel.TUMOR),
            ({"tumor": 20, "normal": 80}, PatchLabel.NOLABEL),
            ({"tumor": 21}, PatchLabel.TUMOR),
            ({"normal": 100}, PatchLabel.NORMAL),
            ({"normal": 81}, PatchLabel.NORMAL),
            ({"normal": 80, "unannotated": 20}, PatchLabel.NOLABEL),
            ({"tumor": 10, "normal": 50, "unannotated": 40}, PatchLabel.NOLABEL),
        ],
    )
    def test_rules(self, fractions, expected):
        """Test the tumor rule first, then the normal rule, both strict."""
        assert label_patch(_window(**fractions)) == expected


class TestTileSlide:
    """Test tiling a generated slide."""

    def test_patches_match_slide(self, small_gen):
        """Test pixels, positions and labels of the tiled patches."""
        slide, annotation = generate_slide(0, small_gen)
        cfg = PreprocessConfig(patch_size=32)
        patches = tile_slide(slide, annotation, cfg)
        assert patches

        positions = [p.grid_pos for p in patches]
        assert len(set(positions)) == len(positions)
        assert positions == sorted(positions)
        for patch in patches:
            row, col = patch.grid_pos
            window = slide.rgb[row * 32:(row + 1) * 32, col * 32:(col + 1) * 32]
            assert np.array_equal(patch.pixels, window)
            assert patch.label in tuple(PatchLabel)
            assert patch.slide_id == slide.id
