"""Verify all tileseg imports work correctly."""

import sys
import os

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))


def verify_imports():
    """Verify all module imports."""
    print("📦 Verifying Imports...\n")

    imports = [
        # Utils
        ("src.utils.config", "config"),
        ("src.utils.config", "load_run_config"),
        ("src.utils.logger", "logger"),
        ("src.utils.seeding", "derive_seed"),
        ("src.utils.exceptions", "TileSegException"),

        # Autodiff
        ("src.autodiff.tensor", "Tape"),
        ("src.autodiff.ops", "conv2d"),
        ("src.autodiff.losses", "masked_softmax_cross_entropy"),
        ("src.autodiff.optim", "Adam"),
        ("src.autodiff.serialization", "save_named"),

        # Data
        ("src.synth.dataset", "generate_dataset"),
        ("src.preprocess.tiling", "tile_slide"),
        ("src.preprocess.augment", "augment"),
        ("src.featuremap.maps", "build_layout"),

        # Models and training
        ("src.models.params", "init_params"),
        ("src.training.end_to_end", "compute_e2e_gradients"),
        ("src.training.separate", "train_segmentation"),
        ("src.training.predict", "predict"),
        ("src.evaluation.report", "evaluate_method"),

        # Tools and stages
        ("src.tools.heatmap_tool", "HeatmapTool"),
        ("src.tools.manifest_tool", "ManifestTool"),
        ("src.stages", "PIPELINE"),
        ("src.graph.workflow", "PipelineWorkflow"),
        ("src.graph.repeats", "RepeatedRuns"),

        # Main
        ("src.main", "main"),
    ]

    failed = []

    for module, name in imports:
        try:
            exec(f"from {module} import {name}")
            print(f"✅ {module}.{name}")
        except Exception as e:
            print(f"❌ {module}.{name}: {str(e)[:50]}")
            failed.append((module, name, str(e)))

    if failed:
        print(f"\n❌ {len(failed)} import(s) failed:")
        for module, name, error in failed:
            print(f"   - {module}.{name}: {error[:50]}")
        return 1
    else:
        print(f"\n✅ All {len(imports)} imports successful!")
        return 0


if __name__ == "__main__":
    sys.exit(verify_imports())
