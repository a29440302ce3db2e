"""Separate Learning stages: extractor, feature cache, segmentation."""

from typing import List, Sequence

from src.featuremap.cache import cache_paths, load_slide_features
from src.models.params import (
    EXTRACTOR,
    SEGMENTATION,
    init_extractor,
    init_segmentation,
    load_checkpoint,
    save_checkpoint,
)
from src.stages.base_stage import BaseStage, RunPaths, StageResult
from src.training.data import load_split_patches
from src.training.separate import extract_all_features, train_feature_extractor, train_segmentation
from src.utils.config import AugConfig, RunConfig
from src.utils.exceptions import StageInputError


class TrainClassifierStage(BaseStage):
    """Trains the patch feature extractor with its classification head."""

    name = "TrainClassifier"
    command = "train-classifier"

    def input_paths(self, paths: RunPaths) -> Sequence:
        return [paths.patches]

    def _run(self, run_config: RunConfig, paths: RunPaths) -> StageResult:
        arch = run_config.resolved_arch()
        train_ids = self._dataset(paths).ids("train")
        slides = load_split_patches(paths.patches, train_ids)
        patches = [p for slide_id in train_ids for p in slides[slide_id]]

        aug = run_config.aug
        if not run_config.train.augment:
            aug = AugConfig.disabled(run_config.aug.crop_size)
        params, trace = train_feature_extractor(
            init_extractor(run_config.seed, arch), patches, run_config.train, aug, run_config.seed
        )
        checkpoint = paths.checkpoint(EXTRACTOR)
        save_checkpoint(checkpoint, params, arch, EXTRACTOR)
        trace.write_csv(paths.traces / "extractor.csv")
        final = trace.epoch_mean(run_config.train.extractor_epochs - 1)
        return StageResult(
            self.command,
            {"checkpoint": str(checkpoint), "trace": str(paths.traces / "extractor.csv")},
            [f"extractor final epoch loss = {final}"],
        )


class ExtractFeaturesStage(BaseStage):
    """Caches frozen-extractor features and layouts for every slide."""

    name = "ExtractFeatures"
    command = "extract-features"

    def input_paths(self, paths: RunPaths) -> Sequence:
        return [paths.patches, paths.checkpoint(EXTRACTOR)]

    def _run(self, run_config: RunConfig, paths: RunPaths) -> StageResult:
        arch = run_config.resolved_arch()
        params = load_checkpoint(paths.checkpoint(EXTRACTOR), arch, EXTRACTOR)
        dataset = self._dataset(paths)
        slides = load_split_patches(paths.patches, sorted(dataset.splits))
        items = extract_all_features(
            params,
            slides,
            run_config.featuremap,
            arch.crop_size,
            run_config.train.batch_size,
            cache_dir=paths.features,
        )
        return StageResult(
            self.command, {"features": str(paths.features)}, [f"cached slides = {len(items)}"]
        )


def _cached(paths: RunPaths, slide_ids: Sequence[str]) -> List[str]:
    return [s for s in slide_ids if all(p.is_file() for p in cache_paths(paths.features, s))]


class TrainSegmentationStage(BaseStage):
    """Trains the segmentation net on the cached training-split maps."""

    name = "TrainSegmentation"
    command = "train-seg"

    def input_paths(self, paths: RunPaths) -> Sequence:
        return [paths.features]

    def _run(self, run_config: RunConfig, paths: RunPaths) -> StageResult:
        arch = run_config.resolved_arch()
        dataset = self._dataset(paths)
        train_ids = dataset.ids("train")
        cached = _cached(paths, train_ids)
        if not cached:
            expected = [str(cache_paths(paths.features, s)[0]) for s in train_ids]
            raise StageInputError("no cached training features", expected)
        items = [load_slide_features(paths.features, s) for s in cached]
        val_ids = _cached(paths, dataset.ids("val"))
        val_items = [load_slide_features(paths.features, s) for s in val_ids]

        params, trace = train_segmentation(
            init_segmentation(run_config.seed, arch),
            items,
            run_config.train,
            run_config.seed,
            val_items=val_items,
        )
        checkpoint = paths.checkpoint(SEGMENTATION)
        save_checkpoint(checkpoint, params, arch, SEGMENTATION)
        trace.write_csv(paths.traces / "segmentation.csv")
        final = trace.epoch_mean(run_config.train.segmentation_epochs - 1)
        return StageResult(
            self.command,
            {"checkpoint": str(checkpoint), "trace": str(paths.traces / "segmentation.csv")},
            [
                f"segmentation final epoch loss = {final}",
                f"segmentation val loss = {trace.final_validation!r}",
            ],
        )
