"""Tests for component placement, feature and label maps, and the feature cache."""

import numpy as np
import pytest

from src.featuremap import (
    IGNORE,
    NORMAL,
    TUMOR,
    SlideFeatures,
    assemble_feature_map,
    assemble_label_map,
    build_layout,
    cell_to_patch,
    load_slide_features,
    place_component,
    save_slide_features,
    tissue_components,
)
from src.preprocess.tiling import PatchLabel
from src.utils.config import FeatureMapConfig, SlideGenConfig
from src.utils.exceptions import MapOverflowError, PlacementMismatchError, ValidationError


class TestPlacement:
    """Test centered placement of components."""

    def test_single_cell(self):
        """Test one cell in a 4x4 map lands at (1, 1)."""
        placement = place_component([(7, 9)], 4)
        assert placement.cell_of((7, 9)) == (1, 1)

    def test_bounding_box_offset(self):
        """Test a 2x2 bounding box in a 4x4 map gets offset (1, 1)."""
        placement = place_component([(3, 3), (4, 4)], 4)
        assert placement.offset == (1, 1)
        assert placement.cell_of((4, 4)) == (2, 2)

    def test_odd_slack_floors(self):
        """Test odd slack rounds the offset down."""
        placement = place_component([(0, 0), (0, 1)], (3, 5))
        assert placement.offset == (1, 1)

    def test_overflow_error(self):
        """Test a 33x33 component does not fit a 32x32 map and reports the excess."""
        with pytest.raises(MapOverflowError) as exc_info:
            place_component([(0, 0), (32, 32)], 32)
        assert exc_info.value.overflow == (1, 1)

    def test_overflow_crop(self):
        """Test crop mode drops the positions that fall outside."""
        positions = [(0, c) for c in range(6)]
        placement = place_component(positions, 4, overflow="crop")
        assert placement.offset == (1, -1)
        assert placement.positions == ((0, 1), (0, 2), (0, 3), (0, 4))
        assert placement.dropped == ((0, 0), (0, 5))

    def test_empty_and_repeated(self):
        """Test empty components and repeated positions are rejected."""
        with pytest.raises(ValidationError):
            place_component([], 4)
        with pytest.raises(ValidationError):
            place_component([(1, 1), (1, 1)], 4)

    def test_cell_to_patch(self):
        """Test the inverse lookup, including an unoccupied cell."""
        positions = [(5, 5), (5, 6), (6, 5)]
        placement = place_component(positions, 4)
        for position in positions:
            assert cell_to_patch(placement, placement.cell_of(position)) == position
        assert cell_to_patch(placement, placement.cell_of((6, 6))) is None
        assert placement.occupancy.sum() == 3


class TestComponents:
    """Test 8-connected tissue components."""

    def test_diagonal_connects(self):
        """Test diagonal neighbours share a component."""
        assert tissue_components([(0, 0), (1, 1)]) == [[(0, 0), (1, 1)]]

    def test_separate_lumps(self):
        """Test lumps come back in order of their topmost-leftmost cell."""
        cells = [(5, 5), (0, 3), (0, 4), (5, 6), (2, 0)]
        assert tissue_components(cells) == [[(0, 3), (0, 4)], [(2, 0)], [(5, 5), (5, 6)]]

    def test_empty(self):
        """Test no cells give no components."""
        assert tissue_components([]) == []

    def test_generated_lumps(self, default_slides):
        """Test kept patches of generated slides form at most max_lumps components."""
        max_lumps = SlideGenConfig().max_lumps
        assert max_lumps == 3
        for _, _, patches in default_slides:
            components = tissue_components(p.grid_pos for p in patches)
            assert 1 <= len(components) <= max_lumps


class TestFeatureMap:
    """Test feature map assembly."""

    def test_zero_padding(self):
        """Test occupied cells hold the vectors and every other cell is zero."""
        features = [((2, 2), np.array([1.0, 2.0])), ((2, 3), np.array([3.0, 4.0]))]
        fmap = assemble_feature_map(features, 4)
        assert fmap.data.shape == (2, 4, 4)
        assert fmap.data[:, 1, 1].tolist() == [1.0, 2.0]
        assert fmap.data[:, 1, 2].tolist() == [3.0, 4.0]
        assert np.count_nonzero(fmap.data) == 4

    def test_translation_invariance(self):
        """Test shifting a component on the slide leaves its map unchanged."""
        rng = np.random.default_rng(0)
        shape = [(0, 0), (0, 1), (1, 1), (2, 1)]
        vectors = [rng.normal(size=3) for _ in shape]
        first = assemble_feature_map(list(zip(shape, vectors)), 6)
        moved = [(r + 11, c + 4) for r, c in shape]
        second = assemble_feature_map(list(zip(moved, vectors)), 6)
        assert np.array_equal(first.data, second.data)


class TestLabelMap:
    """Test label maps and their agreement with feature maps."""

    def test_codes(self):
        """Test tumor, normal and NoLabel cells, with empty cells ignored."""
        positions = [(0, 0), (0, 1), (1, 0)]
        placement = place_component(positions, 4)
        labels = list(zip(positions, [PatchLabel.TUMOR, PatchLabel.NORMAL, PatchLabel.NOLABEL]))
        label_map = assemble_label_map(labels, 4, placement)

        assert label_map.codes[placement.cell_of((0, 0))] == TUMOR
        assert label_map.codes[placement.cell_of((0, 1))] == NORMAL
        assert label_map.codes[placement.cell_of((1, 0))] == IGNORE
        assert label_map.nolabel[placement.cell_of((1, 0))]
        assert label_map.mask.sum() == 2
        assert label_map.targets.min() >= 0

    def test_mismatched_position(self):
        """Test a label outside the placement is rejected."""
        placement = place_component([(0, 0)], 4)
        with pytest.raises(PlacementMismatchError):
            assemble_label_map([((3, 3), PatchLabel.TUMOR)], 4, placement)

    def test_mismatched_size(self):
        """Test a label map of another size is rejected."""
        placement = place_component([(0, 0)], 4)
        with pytest.raises(PlacementMismatchError):
            assemble_label_map([((0, 0), PatchLabel.TUMOR)], 8, placement)


class TestLayout:
    """Test per-slide layouts."""

    def test_per_lump_maps(self):
        """Test one map per lump and a scatter target for every patch."""
        positions = [(0, 0), (0, 1), (5, 5), (6, 5)]
        layout = build_layout("s", positions, FeatureMapConfig(lump_map_size=4))
        assert layout.n_maps == 2
        assert layout.map_index.tolist() == [0, 0, 1, 1]
        assert layout.map_shape == (4, 4)

        features = np.arange(8, dtype=np.float64).reshape(4, 2)
        maps = layout.feature_maps(features)
        assert maps.shape == (2, 2, 4, 4)
        for k, position in enumerate(positions):
            row, col = layout.placements[layout.map_index[k]].cell_of(position)
            assert maps[layout.map_index[k], :, row, col].tolist() == features[k].tolist()

    def test_whole_slide_map(self, whole_slide_map):
        """Test a single map when lumps are not separated."""
        layout = build_layout("s", [(0, 0), (3, 3)], whole_slide_map)
        assert layout.n_maps == 1
        assert layout.map_index.tolist() == [0, 0]

    def test_label_maps_follow_layout(self, toy_slide):
        """Test label maps share the placements of the feature maps."""
        maps = toy_slide.layout.label_maps(toy_slide.labels)
        assert [m.placement for m in maps] == toy_slide.layout.placements


class TestFeatureCache:
    """Test the per-slide feature cache."""

    def test_round_trip(self, tmp_path):
        """Test a reload is bit-equal after float32 rounding."""
        positions = [(0, 0), (0, 1), (4, 4)]
        layout = build_layout("slide_0003", positions, FeatureMapConfig(lump_map_size=4))
        features = np.random.default_rng(1).normal(size=(3, 5)).astype(np.float32)
        features = features.astype(np.float64)
        labels = [PatchLabel.TUMOR, PatchLabel.NOLABEL, PatchLabel.NORMAL]
        save_slide_features(tmp_path, SlideFeatures(layout, features, labels))

        loaded = load_slide_features(tmp_path, "slide_0003")
        assert np.array_equal(loaded.features, features)
        assert loaded.labels == labels
        assert loaded.layout.positions == positions
        assert loaded.layout.placements == layout.placements
        assert np.array_equal(loaded.feature_maps(), layout.feature_maps(features))
        assert (tmp_path / "slide_0003.layout.json").is_file()
