"""Per-method evaluation, patient staging and metric files."""

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Mapping, Sequence, Tuple, Union

import numpy as np

from src.evaluation.lesion import (
    SLIDES_PER_PATIENT,
    LesionCalibration,
    PNStage,
    SlideClass,
    kappa,
    pn_stage,
    slide_class,
    true_slide_class,
)
from src.evaluation.metrics import count_tumor_points, labeled_scores, patch_accuracy, pr_auc
from src.featuremap.maps import LabelMap
from src.training.predict import PredictionMap
from src.utils.logger import logger

PathLike = Union[str, Path]

METRIC_NAMES = ("accuracy", "pr_auc", "tumor_points", "kappa")
RUNS_SUMMARY_HEADER = ("method", "metric", "mean", "std", "runs")


@dataclass
class Patient:
    patient_id: str
    slide_ids: List[str]
    true_stage: PNStage
    predicted_stage: PNStage


@dataclass
class MethodReport:
    """Metrics of one prediction method on the test split."""

    method: str
    accuracy: float
    pr_auc: float
    tumor_points: int
    slide_classes: Dict[str, SlideClass] = field(default_factory=dict)
    patients: List[Patient] = field(default_factory=list)
    kappa: float = float("nan")

    def metrics(self) -> Dict[str, float]:
        return {
            "accuracy": self.accuracy,
            "pr_auc": self.pr_auc,
            "tumor_points": float(self.tumor_points),
            "kappa": self.kappa,
        }


def group_patients(
    slide_ids: Sequence[str], slides_per_patient: int = SLIDES_PER_PATIENT
) -> List[List[str]]:
    """Consecutive groups of slides; a trailing partial group is dropped."""
    groups = [
        list(slide_ids[i:i + slides_per_patient])
        for i in range(0, len(slide_ids) - slides_per_patient + 1, slides_per_patient)
    ]
    leftover = len(slide_ids) - slides_per_patient * len(groups)
    if leftover:
        logger.warning(f"{leftover} slide(s) do not fill a patient and are left out of staging")
    return groups


def evaluate_method(
    method: str,
    preds: Mapping[str, Sequence[PredictionMap]],
    truths: Mapping[str, Sequence[LabelMap]],
    cal: LesionCalibration,
    threshold: float = 0.5,
) -> MethodReport:
    """Patch metrics, slide classes and patient stages for one method."""
    slide_ids = sorted(preds)
    all_preds = [m for s in slide_ids for m in preds[s]]
    all_truths = [m for s in slide_ids for m in truths[s]]

    scores, labels = labeled_scores(all_preds, all_truths)
    report = MethodReport(
        method=method,
        accuracy=patch_accuracy(all_preds, all_truths, threshold),
        pr_auc=pr_auc(scores, labels) if np.any(labels == 1) else float("nan"),
        tumor_points=count_tumor_points(all_preds, threshold),
    )
    true_classes = {}
    for slide_id in slide_ids:
        report.slide_classes[slide_id] = slide_class(preds[slide_id], cal, threshold)
        true_classes[slide_id] = true_slide_class(truths[slide_id], cal)

    for number, group in enumerate(group_patients(slide_ids)):
        report.patients.append(
            Patient(
                patient_id=f"patient_{number:03d}",
                slide_ids=group,
                true_stage=pn_stage([true_classes[s] for s in group]),
                predicted_stage=pn_stage([report.slide_classes[s] for s in group]),
            )
        )
    if report.patients:
        report.kappa = kappa(
            [p.predicted_stage for p in report.patients], [p.true_stage for p in report.patients]
        )
    logger.info(
        f"{method}: accuracy {report.accuracy:.4f}, PR-AUC {report.pr_auc:.4f}, "
        f"tumor points {report.tumor_points}, kappa {report.kappa:.4f}"
    )
    return report


def write_metrics_csv(path: PathLike, reports: Sequence[MethodReport]) -> None:
    """One ``method,metric,value`` row per metric, then one row per slide class and patient."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["method", "metric", "value"])
        for report in reports:
            for name, value in report.metrics().items():
                writer.writerow([report.method, name, repr(value)])
            for slide_id, cls in sorted(report.slide_classes.items()):
                writer.writerow([report.method, f"slide_class.{slide_id}", cls.label])
            for patient in report.patients:
                writer.writerow([report.method, f"pn_stage.{patient.patient_id}",
                                 f"{patient.predicted_stage.label}/{patient.true_stage.label}"])


def summary_text(reports: Sequence[MethodReport]) -> str:
    lines = ["method          accuracy  pr_auc    tumor_points  kappa"]
    for r in reports:
        lines.append(
            f"{r.method:<15} {r.accuracy:8.4f}  {r.pr_auc:8.4f}  "
            f"{r.tumor_points:12d}  {r.kappa:6.3f}"
        )
    for r in reports:
        if r.patients:
            lines.append("")
            lines.append(f"{r.method} patients (predicted / true):")
            for p in r.patients:
                lines.append(f"  {p.patient_id}: {p.predicted_stage.label} / {p.true_stage.label}")
    return "\n".join(lines) + "\n"


def read_metrics_csv(path: PathLike) -> Dict[str, Dict[str, float]]:
    """Scalar metrics per method from a file written by ``write_metrics_csv``."""
    metrics: Dict[str, Dict[str, float]] = {}
    with open(path, newline="", encoding="utf-8") as f:
        for row in csv.DictReader(f):
            if row["metric"] in METRIC_NAMES:
                metrics.setdefault(row["method"], {})[row["metric"]] = float(row["value"])
    return metrics


def summarize_runs(runs: Sequence[Mapping[str, float]]) -> Dict[str, Tuple[float, float]]:
    """Mean and sample standard deviation of each metric over repeated runs.

    NaN values (e.g. kappa without a full patient) are left out; a metric
    with no finite value summarizes to ``(nan, nan)``.
    """
    names = sorted({name for run in runs for name in run})
    summary = {}
    for name in names:
        values = np.array([run[name] for run in runs if name in run], dtype=np.float64)
        values = values[~np.isnan(values)]
        if values.size == 0:
            summary[name] = (float("nan"), float("nan"))
            continue
        std = float(np.std(values, ddof=1)) if values.size > 1 else 0.0
        summary[name] = (float(np.mean(values)), std)
    return summary


def summarize_method_runs(
    runs: Sequence[Mapping[str, Mapping[str, float]]]
) -> Dict[str, Dict[str, Tuple[float, float]]]:
    """``summarize_runs`` per method over runs read with ``read_metrics_csv``."""
    methods = sorted({method for run in runs for method in run})
    return {m: summarize_runs([run[m] for run in runs if m in run]) for m in methods}


def write_runs_summary_csv(
    path: PathLike, summary: Mapping[str, Mapping[str, Tuple[float, float]]], n_runs: int
) -> None:
    """One ``method,metric,mean,std,runs`` row per method and metric."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(RUNS_SUMMARY_HEADER)
        for method, metrics in summary.items():
            for name, (mean, std) in metrics.items():
                writer.writerow([method, name, repr(mean), repr(std), n_runs])


def runs_summary_text(summary: Mapping[str, Mapping[str, Tuple[float, float]]], n_runs: int) -> str:
    lines = [f"mean +- std over {n_runs} run(s)", "method          metric        mean      std"]
    for method, metrics in summary.items():
        for name, (mean, std) in metrics.items():
            lines.append(f"{method:<15} {name:<12} {mean:9.4f} {std:8.4f}")
    return "\n".join(lines) + "\n"
