"""Tools package for tileseg."""

from src.tools.heatmap_tool import HeatmapTool
from src.tools.manifest_tool import ManifestTool

__all__ = [
    "HeatmapTool",
    "ManifestTool",
]
