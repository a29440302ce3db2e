"""Slide classes, pN-stages and quadratically weighted kappa."""

from dataclasses import dataclass
from enum import IntEnum
from typing import Optional, Sequence, Union

import numpy as np
from scipy import ndimage

from src.featuremap.maps import TUMOR, LabelMap
from src.training.predict import PredictionMap
from src.utils.config import EvalConfig
from src.utils.exceptions import ValidationError

_EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)
SLIDES_PER_PATIENT = 5


class SlideClass(IntEnum):
    """Lesion-size classes, ordered by severity."""

    NEGATIVE = 0
    ITC = 1
    MICRO = 2
    MACRO = 3

    @property
    def label(self) -> str:
        return {0: "Negative", 1: "ITC", 2: "Micro", 3: "Macro"}[int(self)]


class PNStage(IntEnum):
    """Patient stages in the order used for kappa weighting."""

    PN0 = 0
    PN0_ITC = 1
    PN1MI = 2
    PN1 = 3
    PN2 = 4

    @property
    def label(self) -> str:
        return {0: "pN0", 1: "pN0(i+)", 2: "pN1mi", 3: "pN1", 4: "pN2"}[int(self)]


@dataclass(frozen=True)
class LesionCalibration:
    """Physical size of one map cell and the class thresholds, in millimeters."""

    cell_mm: float
    itc_mm: float = 0.2
    macro_mm: float = 2.0
    measure: str = "extent"

    @classmethod
    def from_config(cls, cfg: EvalConfig) -> "LesionCalibration":
        return cls(cfg.cell_mm, cfg.itc_mm, cfg.macro_mm, cfg.lesion_measure)


def largest_lesion_mm(tumor: np.ndarray, cal: LesionCalibration) -> float:
    """Size of the largest 8-connected tumor component.

    ``extent`` measures the longer bounding-box side; ``area`` the side of a
    square with the component's cell count.
    """
    labeled, count = ndimage.label(tumor, structure=_EIGHT_CONNECTED)
    best = 0.0
    for box, index in zip(ndimage.find_objects(labeled), range(1, count + 1)):
        if cal.measure == "area":
            size = float(np.sqrt(np.sum(labeled[box] == index)))
        else:
            size = float(max(box[0].stop - box[0].start, box[1].stop - box[1].start))
        best = max(best, size * cal.cell_mm)
    return best


def classify_lesion(size_mm: float, cal: LesionCalibration) -> SlideClass:
    if size_mm > cal.macro_mm:
        return SlideClass.MACRO
    if size_mm > cal.itc_mm:
        return SlideClass.MICRO
    if size_mm > 0:
        return SlideClass.ITC
    return SlideClass.NEGATIVE


def _check(cal: Optional[LesionCalibration]) -> LesionCalibration:
    if cal is None or cal.cell_mm <= 0:
        raise ValidationError("missing calibration: cell_mm must be positive")
    return cal


def slide_class(
    preds: Union[PredictionMap, Sequence[PredictionMap]],
    cal: Optional[LesionCalibration],
    threshold: float = 0.5,
) -> SlideClass:
    """Class of a slide from the largest predicted lesion over its maps.

    Raises:
        ValidationError: If the calibration is missing
    """
    cal = _check(cal)
    preds = [preds] if isinstance(preds, PredictionMap) else list(preds)
    size = max(
        (largest_lesion_mm((p.probabilities >= threshold) & p.valid, cal) for p in preds),
        default=0.0,
    )
    return classify_lesion(size, cal)


def true_slide_class(truths: Sequence[LabelMap], cal: Optional[LesionCalibration]) -> SlideClass:
    """Class of a slide from its annotation-derived label maps."""
    cal = _check(cal)
    size = max((largest_lesion_mm(t.codes == TUMOR, cal) for t in truths), default=0.0)
    return classify_lesion(size, cal)


def pn_stage(classes: Sequence[SlideClass]) -> PNStage:
    """Patient stage from exactly five slide classes.

    Raises:
        ValidationError: If there are not exactly five classes
    """
    if len(classes) != SLIDES_PER_PATIENT:
        raise ValidationError(
            f"pn_stage needs exactly {SLIDES_PER_PATIENT} slides, got {len(classes)}"
        )
    macro = sum(1 for c in classes if c == SlideClass.MACRO)
    if macro >= 4:
        return PNStage.PN2
    if macro >= 1:
        return PNStage.PN1
    if SlideClass.MICRO in classes:
        return PNStage.PN1MI
    if SlideClass.ITC in classes:
        return PNStage.PN0_ITC
    return PNStage.PN0


def kappa(pred: Sequence[int], true: Sequence[int], n_classes: int = len(PNStage)) -> float:
    """Cohen's kappa with quadratic weights over ``n_classes`` ordered classes.

    Returns 1.0 when both labelings are the same constant.

    Raises:
        ValidationError: If the labelings are empty or differ in length
    """
    pred = np.asarray([int(p) for p in pred], dtype=np.int64)
    true = np.asarray([int(t) for t in true], dtype=np.int64)
    if pred.size == 0 or pred.size != true.size:
        raise ValidationError(
            f"kappa needs equal nonempty labelings, got {pred.size} and {true.size}"
        )

    n = pred.size
    observed = np.zeros((n_classes, n_classes))
    np.add.at(observed, (pred, true), 1.0)
    observed /= n
    pred_counts = np.bincount(pred, minlength=n_classes)
    true_counts = np.bincount(true, minlength=n_classes)
    expected = np.outer(pred_counts, true_counts) / float(n * n)
    i, j = np.indices((n_classes, n_classes))
    weights = (i - j) ** 2 / float((n_classes - 1) ** 2)

    denominator = float(np.sum(weights * expected))
    if denominator == 0.0:
        return 1.0
    return 1.0 - float(np.sum(weights * observed)) / denominator
