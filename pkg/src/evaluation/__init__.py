"""Patch-level and patient-level evaluation."""

from src.evaluation.metrics import count_tumor_points, labeled_scores, patch_accuracy, pr_auc
from src.evaluation.lesion import (
    LesionCalibration,
    PNStage,
    SlideClass,
    classify_lesion,
    kappa,
    largest_lesion_mm,
    pn_stage,
    slide_class,
    true_slide_class,
)
from src.evaluation.report import (
    MethodReport,
    Patient,
    evaluate_method,
    group_patients,
    read_metrics_csv,
    runs_summary_text,
    summarize_method_runs,
    summarize_runs,
    summary_text,
    write_metrics_csv,
    write_runs_summary_csv,
)

__all__ = [
    "count_tumor_points",
    "labeled_scores",
    "patch_accuracy",
    "pr_auc",
    "LesionCalibration",
    "PNStage",
    "SlideClass",
    "classify_lesion",
    "kappa",
    "largest_lesion_mm",
    "pn_stage",
    "slide_class",
    "true_slide_class",
    "MethodReport",
    "Patient",
    "evaluate_method",
    "group_patients",
    "read_metrics_csv",
    "runs_summary_text",
    "summarize_method_runs",
    "summarize_runs",
    "summary_text",
    "write_metrics_csv",
    "write_runs_summary_csv",
]
