"""Tests for heatmap rendering and stage manifests."""

import numpy as np
import pytest

from src.featuremap import assemble_label_map, place_component
from src.preprocess.tiling import PatchLabel
from src.synth.generator import SlideImage
from src.synth.raster_io import read_ppm
from src.tools.heatmap_tool import HeatmapTool
from src.tools.manifest_tool import ManifestTool
from src.training.predict import PredictionMap
from src.utils.config import load_run_config
from src.utils.exceptions import PlacementMismatchError


@pytest.fixture
def placement():
    """Three occupied cells of a 2x2 map; cell (1, 1) stays empty."""
    return place_component([(0, 0), (0, 1), (1, 0)], 2)


@pytest.fixture
def maps(placement):
    """Prediction and label map: tumor, normal, and a NoLabel cell predicted tumor."""
    probabilities = np.array([[0.9, 0.1], [0.7, 0.0]])
    pred = PredictionMap(probabilities, placement.occupancy, placement)
    labels = [((0, 0), PatchLabel.TUMOR), ((0, 1), PatchLabel.NORMAL), ((1, 0), PatchLabel.NOLABEL)]
    return pred, assemble_label_map(labels, 2, placement)


class TestHeatmapTool:
    """Test heatmap colors and extents."""

    def test_colors(self, maps):
        """Test red, gray, the NoLabel blend and white for empty cells."""
        pred, truth = maps
        image = HeatmapTool(scale=1).render(pred, truth)
        assert image.shape == (2, 2, 3)
        assert image[0, 0].tolist() == [255, 0, 0]
        assert image[0, 1].tolist() == [128, 128, 128]
        assert image[1, 0].tolist() == [191, 0, 64]
        assert image[1, 1].tolist() == [255, 255, 255]

    def test_scale(self, maps):
        """Test every cell becomes a scale x scale block."""
        pred, truth = maps
        image = HeatmapTool(scale=4).render(pred, truth)
        assert image.shape == (8, 8, 3)
        assert np.all(image[:4, :4] == [255, 0, 0])

    def test_side_panels(self, maps):
        """Test the truth and slide panels widen the image."""
        pred, truth = maps
        slide = SlideImage("s", np.full((8, 8, 3), 40, dtype=np.uint8))
        image = HeatmapTool(scale=2).render(pred, truth, slide=slide, patch_size=4, with_truth=True)
        assert image.shape == (4, 12, 3)
        assert image[0, 4].tolist() == [255, 0, 0]
        assert image[2, 4].tolist() == [128, 0, 128]
        assert image[0, 8].tolist() == [40, 40, 40]

    def test_panels_off(self, maps):
        """Test without side panels the image is exactly the upscaled map."""
        pred, truth = maps
        scale = 3
        image = HeatmapTool(scale=scale).render(pred, truth, slide=None, with_truth=False)
        height, width = pred.map_shape
        assert image.shape[:2] == (height * scale, width * scale)

    def test_placement_mismatch(self, maps):
        """Test maps placed differently are rejected."""
        pred, _ = maps
        other = place_component([(0, 0)], 2)
        truth = assemble_label_map([((0, 0), PatchLabel.TUMOR)], 2, other)
        with pytest.raises(PlacementMismatchError):
            HeatmapTool().render(pred, truth)

    def test_execute_writes_ppm(self, tmp_path, maps):
        """Test the written file reads back as the rendered image."""
        pred, truth = maps
        tool = HeatmapTool(scale=3)
        path = tool.execute(tmp_path / "h" / "m0.ppm", pred, truth)
        assert np.array_equal(read_ppm(path), tool.render(pred, truth))


class TestManifestTool:
    """Test stage manifests."""

    def test_manifest_is_a_config(self, tmp_path, tiny_run_config):
        """Test a stage manifest reloads as the configuration it was written with."""
        tool = ManifestTool(tmp_path)
        manifest = tool.execute("synth", tiny_run_config, outputs={"dataset": "d"}, notes=["n = 1"])
        assert manifest == tmp_path / "manifests" / "synth.txt"
        assert load_run_config(manifest) == tiny_run_config

        text = manifest.read_text(encoding="utf-8")
        assert "# stage = synth" in text
        assert "# n = 1" in text
        assert (tmp_path / "run_manifest.txt").read_text().startswith("synth seed=0")

    def test_input_hashes(self, tmp_path, tiny_run_config):
        """Test inputs are hashed and equal content hashes equally."""
        for name in ("a", "b"):
            (tmp_path / name).mkdir()
            (tmp_path / name / "x.bin").write_bytes(b"payload")
        tool = ManifestTool(tmp_path / "run")
        assert tool.hash_path(tmp_path / "a") == tool.hash_path(tmp_path / "b")

        manifest = tool.execute("preprocess", tiny_run_config, inputs=[tmp_path / "a"])
        assert f"sha256={tool.hash_path(tmp_path / 'a')}" in manifest.read_text()

    def test_run_manifest_appends(self, tmp_path, tiny_run_config):
        """Test every stage adds to the run-wide manifest."""
        tool = ManifestTool(tmp_path)
        tool.execute("synth", tiny_run_config)
        tool.execute("preprocess", tiny_run_config)
        lines = (tmp_path / "run_manifest.txt").read_text().splitlines()
        assert [line.split()[0] for line in lines] == ["synth", "preprocess"]
