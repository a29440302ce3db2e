"""Feature-map construction: lumps, centered placement, label maps, caches."""

from src.featuremap.placement import (
    Placement,
    as_map_shape,
    cell_to_patch,
    place_component,
    tissue_components,
)
from src.featuremap.maps import (
    IGNORE,
    NORMAL,
    TUMOR,
    FeatureMap,
    LabelMap,
    MapLayout,
    assemble_feature_map,
    assemble_label_map,
    build_layout,
    label_maps_for,
)
from src.featuremap.cache import (
    SlideFeatures,
    load_slide_features,
    round_to_storage,
    save_slide_features,
)

__all__ = [
    "Placement",
    "as_map_shape",
    "cell_to_patch",
    "place_component",
    "tissue_components",
    "IGNORE",
    "NORMAL",
    "TUMOR",
    "FeatureMap",
    "LabelMap",
    "MapLayout",
    "assemble_feature_map",
    "assemble_label_map",
    "build_layout",
    "label_maps_for",
    "SlideFeatures",
    "load_slide_features",
    "round_to_storage",
    "save_slide_features",
]
