"""Stages that build the dataset: slide synthesis and patch extraction."""

from collections import Counter
from typing import Sequence

from src.preprocess.patch_store import write_patch_store
from src.preprocess.tiling import tile_slide
from src.stages.base_stage import BaseStage, RunPaths, StageResult
from src.synth.dataset import MANIFEST_NAME, SPLITS, generate_dataset, load_slide
from src.utils.config import RunConfig


class SynthStage(BaseStage):
    """Generates the synthetic slides, their annotation masks and the split."""

    name = "Synth"
    command = "synth"

    def _run(self, run_config: RunConfig, paths: RunPaths) -> StageResult:
        gen = run_config.gen
        manifest = generate_dataset(run_config.seed, gen.n_slides, gen, paths.dataset)
        notes = [f"split {s} = {len(manifest.ids(s))}" for s in SPLITS]
        return StageResult(self.command, {"dataset": str(paths.dataset)}, notes)


class PreprocessStage(BaseStage):
    """Detects tissue, tiles every slide and labels the patches."""

    name = "Preprocess"
    command = "preprocess"

    def input_paths(self, paths: RunPaths) -> Sequence:
        return [paths.dataset]

    def _run(self, run_config: RunConfig, paths: RunPaths) -> StageResult:
        self._require(paths.dataset / MANIFEST_NAME)
        dataset = self._dataset(paths)
        counts: Counter = Counter()
        for slide_id in sorted(dataset.splits):
            slide, annotation = load_slide(paths.dataset, slide_id)
            patches = tile_slide(slide, annotation, run_config.preprocess)
            write_patch_store(paths.patches, slide_id, patches, run_config.preprocess.patch_size)
            counts.update(p.label.name.lower() for p in patches)
            self.logger.debug(f"{slide_id}: {len(patches)} patches")

        breakdown = ", ".join(f"{v} {k}" for k, v in sorted(counts.items()))
        self._log_execution(f"{sum(counts.values())} patches ({breakdown})")
        notes = [f"patches {label} = {count}" for label, count in sorted(counts.items())]
        return StageResult(self.command, {"patches": str(paths.patches)}, notes)
