"""End-to-End Learning stage."""

from typing import Sequence

from src.models.params import (
    EXTRACTOR,
    SEGMENTATION,
    init_params,
    load_checkpoint,
    save_checkpoint,
)
from src.stages.base_stage import BaseStage, RunPaths, StageResult
from src.training.data import SlideInputs, load_split_patches
from src.training.end_to_end import e2e_train
from src.utils.config import RunConfig
from src.utils.exceptions import StageInputError


class TrainEndToEndStage(BaseStage):
    """Fine-tunes both networks jointly, one slide per step.

    Starts from the Separate Learning checkpoints unless ``train.cold_start``
    is set.
    """

    name = "TrainEndToEnd"
    command = "train-e2e"

    def input_paths(self, paths: RunPaths) -> Sequence:
        return [paths.patches, paths.checkpoint(EXTRACTOR), paths.checkpoint(SEGMENTATION)]

    def _run(self, run_config: RunConfig, paths: RunPaths) -> StageResult:
        arch = run_config.resolved_arch()
        if run_config.train.cold_start:
            self._log_execution("Cold start from fresh weights")
            ext, seg = init_params(run_config.seed, arch)
        else:
            warm = [paths.checkpoint(EXTRACTOR), paths.checkpoint(SEGMENTATION)]
            missing = [str(p) for p in warm if not p.is_file()]
            if missing:
                raise StageInputError(
                    "end-to-end training needs the Separate Learning checkpoints", missing
                )
            ext = load_checkpoint(warm[0], arch, EXTRACTOR)
            seg = load_checkpoint(warm[1], arch, SEGMENTATION)

        train_ids = self._dataset(paths).ids("train")
        slides = load_split_patches(paths.patches, train_ids)
        inputs = [
            SlideInputs.from_patches(s, slides[s], run_config.featuremap, arch.crop_size)
            for s in train_ids
            if slides[s]
        ]
        run = e2e_train(ext, seg, inputs, run_config.train, run_config.seed)

        save_checkpoint(paths.checkpoint(EXTRACTOR, end_to_end=True), ext, arch, EXTRACTOR)
        save_checkpoint(paths.checkpoint(SEGMENTATION, end_to_end=True), seg, arch, SEGMENTATION)
        run.trace.write_csv(paths.traces / "e2e.csv")

        notes = [f"warm_start_loss = {run.warm_start_loss!r}", f"final_loss = {run.final_loss!r}"]
        notes += [report.to_line() for report in run.reports]
        return StageResult(
            self.command,
            {
                "extractor": str(paths.checkpoint(EXTRACTOR, end_to_end=True)),
                "segmentation": str(paths.checkpoint(SEGMENTATION, end_to_end=True)),
                "trace": str(paths.traces / "e2e.csv"),
            },
            notes,
        )
