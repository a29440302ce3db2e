"""Patch-level metrics over prediction and label maps."""

from typing import Sequence, Tuple, Union

import numpy as np
from scipy import ndimage

from src.featuremap.maps import TUMOR, LabelMap
from src.training.predict import PredictionMap
from src.utils.exceptions import NoLabeledCellsError, PlacementMismatchError, ValidationError

Maps = Union[PredictionMap, Sequence[PredictionMap]]
Labels = Union[LabelMap, Sequence[LabelMap]]


def _as_list(value):
    return [value] if isinstance(value, (PredictionMap, LabelMap)) else list(value)


def labeled_scores(preds: Maps, truths: Labels) -> Tuple[np.ndarray, np.ndarray]:
    """Scores and {0, 1} labels of every valid cell labeled Tumor or Normal.

    Raises:
        PlacementMismatchError: If a prediction and its label map were placed differently
    """
    preds, truths = _as_list(preds), _as_list(truths)
    if len(preds) != len(truths):
        raise PlacementMismatchError(f"{len(preds)} prediction maps for {len(truths)} label maps")
    scores, labels = [], []
    for pred, truth in zip(preds, truths):
        if pred.placement != truth.placement:
            raise PlacementMismatchError("prediction and label maps use different placements")
        keep = pred.valid & truth.mask
        scores.append(pred.probabilities[keep])
        labels.append((truth.codes[keep] == TUMOR).astype(np.int64))
    if not scores:
        return np.zeros(0), np.zeros(0, dtype=np.int64)
    return np.concatenate(scores), np.concatenate(labels)


def patch_accuracy(preds: Maps, truths: Labels, threshold: float = 0.5) -> float:
    """Fraction of labeled cells classified correctly; ``p >= threshold`` means Tumor.

    Raises:
        NoLabeledCellsError: If no valid cell is labeled
    """
    scores, labels = labeled_scores(preds, truths)
    if labels.size == 0:
        raise NoLabeledCellsError("no labeled cells")
    return float(np.mean((scores >= threshold).astype(np.int64) == labels))


def pr_auc(scores: Sequence[float], labels: Sequence[int]) -> float:
    """Average precision, stepping through distinct scores from high to low.

    Items with equal scores enter the ranking together, so the result does
    not depend on their order.

    Raises:
        ValidationError: If there is no positive label
    """
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    labels = np.asarray(labels).reshape(-1)
    if scores.shape != labels.shape:
        raise ValidationError(f"{scores.size} scores for {labels.size} labels")
    positives = int(np.sum(labels == 1))
    if positives == 0:
        raise ValidationError("pr_auc needs at least one positive label")

    order = np.argsort(-scores, kind="stable")
    ranked_scores = scores[order]
    ranked_labels = labels[order]
    area = 0.0
    recall_prev = 0.0
    tp = fp = 0
    i = 0
    while i < len(ranked_scores):
        j = i
        while j < len(ranked_scores) and ranked_scores[j] == ranked_scores[i]:
            if ranked_labels[j] == 1:
                tp += 1
            else:
                fp += 1
            j += 1
        recall = tp / positives
        precision = tp / (tp + fp)
        area += (recall - recall_prev) * precision
        recall_prev = recall
        i = j
    return area


_NEIGHBORS = np.array([[1, 1, 1], [1, 0, 1], [1, 1, 1]])


def count_tumor_points(preds: Maps, threshold: float = 0.5) -> int:
    """Predicted-tumor cells with no predicted-tumor cell among their 8 neighbors."""
    count = 0
    for pred in _as_list(preds):
        tumor = (pred.probabilities >= threshold) & pred.valid
        neighbors = ndimage.convolve(tumor.astype(np.int64), _NEIGHBORS, mode="constant", cval=0)
        count += int(np.sum(tumor & (neighbors == 0)))
    return count
