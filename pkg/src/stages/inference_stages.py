"""Stages on the test split: prediction, evaluation and heatmaps."""

from pathlib import Path
from typing import Dict, List, Sequence

from src.evaluation.lesion import LesionCalibration
from src.evaluation.report import evaluate_method, summary_text, write_metrics_csv
from src.featuremap.maps import LabelMap, label_maps_for
from src.models.params import EXTRACTOR, SEGMENTATION, load_checkpoint
from src.stages.base_stage import BaseStage, RunPaths, StageResult
from src.synth.dataset import load_slide
from src.tools.heatmap_tool import HeatmapTool
from src.training.data import SlideInputs, load_split_patches
from src.training.predict import (
    PredictionMap,
    load_predictions,
    predict,
    predict_patches,
    save_predictions,
)
from src.utils.config import RunConfig
from src.utils.exceptions import StageInputError

CLASSIFIER = "classifier"
SEPARATE = "separate"
END_TO_END = "end_to_end"
METHODS = (CLASSIFIER, SEPARATE, END_TO_END)


def _method_dirs(paths: RunPaths) -> List[str]:
    return [m for m in METHODS if (paths.predictions / m).is_dir()]


def _load_method(paths: RunPaths, method: str) -> Dict[str, List[PredictionMap]]:
    out = {}
    for file in sorted((paths.predictions / method).glob("*.tns")):
        slide_id, maps = load_predictions(file)
        out[slide_id] = maps
    return out


class PredictStage(BaseStage):
    """Writes test-split prediction maps for every available method.

    ``classifier`` uses the extractor head alone, ``separate`` the Separate
    Learning networks, ``end_to_end`` the jointly trained ones when present.
    """

    name = "Predict"
    command = "predict"

    def input_paths(self, paths: RunPaths) -> Sequence:
        return [paths.patches, paths.models]

    def _run(self, run_config: RunConfig, paths: RunPaths) -> StageResult:
        arch = run_config.resolved_arch()
        self._require(paths.checkpoint(EXTRACTOR), paths.checkpoint(SEGMENTATION))
        ext = load_checkpoint(paths.checkpoint(EXTRACTOR), arch, EXTRACTOR)
        seg = load_checkpoint(paths.checkpoint(SEGMENTATION), arch, SEGMENTATION)
        models = {SEPARATE: (ext, seg)}
        e2e = [paths.checkpoint(EXTRACTOR, True), paths.checkpoint(SEGMENTATION, True)]
        if all(p.is_file() for p in e2e):
            models[END_TO_END] = (
                load_checkpoint(e2e[0], arch, EXTRACTOR),
                load_checkpoint(e2e[1], arch, SEGMENTATION),
            )

        test_ids = self._dataset(paths).ids("test")
        slides = load_split_patches(paths.patches, test_ids)
        batch = run_config.train.batch_size
        written = 0
        for slide_id in test_ids:
            if not slides[slide_id]:
                self.logger.warning(f"Test slide {slide_id} has no patches; no prediction")
                continue
            inputs = SlideInputs.from_patches(
                slide_id, slides[slide_id], run_config.featuremap, arch.crop_size
            )
            save_predictions(
                paths.predictions / CLASSIFIER / f"{slide_id}.tns",
                slide_id,
                predict_patches(ext, inputs, batch),
            )
            for method, (m_ext, m_seg) in models.items():
                save_predictions(
                    paths.predictions / method / f"{slide_id}.tns",
                    slide_id,
                    predict(m_ext, m_seg, inputs, batch),
                )
            written += 1

        methods = [CLASSIFIER] + list(models)
        return StageResult(
            self.command,
            {"predictions": str(paths.predictions)},
            [f"predicted slides = {written}", f"methods = {','.join(methods)}"],
        )


class EvalStage(BaseStage):
    """Scores every method's predictions against the test-split labels."""

    name = "Eval"
    command = "eval"

    def input_paths(self, paths: RunPaths) -> Sequence:
        return [paths.predictions, paths.patches]

    def _run(self, run_config: RunConfig, paths: RunPaths) -> StageResult:
        methods = _method_dirs(paths)
        if not methods:
            raise StageInputError("no predictions to evaluate", [str(paths.predictions)])
        test_ids = self._dataset(paths).ids("test")
        slides = load_split_patches(paths.patches, test_ids)
        truths: Dict[str, List[LabelMap]] = {
            s: label_maps_for(s, slides[s], run_config.featuremap) for s in test_ids if slides[s]
        }
        cal = LesionCalibration.from_config(run_config.eval)

        reports = [
            evaluate_method(m, _load_method(paths, m), truths, cal, run_config.eval.threshold)
            for m in methods
        ]
        write_metrics_csv(paths.metrics / "metrics.csv", reports)
        summary = summary_text(reports)
        (paths.metrics / "summary.txt").write_text(summary, encoding="utf-8")
        print(summary, end="")

        notes = [f"{r.method} {k} = {v!r}" for r in reports for k, v in r.metrics().items()]
        return StageResult(
            self.command,
            {
                "metrics": str(paths.metrics / "metrics.csv"),
                "summary": str(paths.metrics / "summary.txt"),
            },
            notes,
        )


class RenderHeatmapStage(BaseStage):
    """Renders one PPM heatmap per method, test slide and feature map."""

    name = "RenderHeatmap"
    command = "render-heatmap"

    def input_paths(self, paths: RunPaths) -> Sequence:
        return [paths.predictions]

    def _run(self, run_config: RunConfig, paths: RunPaths) -> StageResult:
        methods = _method_dirs(paths)
        if not methods:
            raise StageInputError("no predictions to render", [str(paths.predictions)])
        tool = HeatmapTool(run_config.eval.heatmap_scale, run_config.eval.threshold)
        test_ids = self._dataset(paths).ids("test")
        slides = load_split_patches(paths.patches, test_ids)
        with_slide = run_config.eval.heatmap_slide_panel

        written: List[Path] = []
        for method in methods:
            for slide_id, preds in _load_method(paths, method).items():
                truths = label_maps_for(slide_id, slides[slide_id], run_config.featuremap)
                slide = load_slide(paths.dataset, slide_id)[0] if with_slide else None
                for k, (pred, truth) in enumerate(zip(preds, truths)):
                    written.append(
                        tool.execute(
                            paths.heatmaps / method / f"{slide_id}_m{k}.ppm",
                            pred,
                            truth,
                            slide=slide,
                            patch_size=run_config.preprocess.patch_size,
                            with_truth=run_config.eval.heatmap_truth_panel,
                        )
                    )
        return StageResult(
            self.command, {"heatmaps": str(paths.heatmaps)}, [f"heatmaps = {len(written)}"]
        )
