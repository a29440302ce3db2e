"""Masked softmax cross-entropy and softmax helpers."""

import numpy as np

from src.autodiff.tensor import Tensor, record
from src.utils.exceptions import NoLabeledCellsError, ShapeMismatchError


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax of a ``[cells, K]`` array."""
    shifted = logits - logits.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=-1, keepdims=True)


def masked_softmax_cross_entropy(
    logits: Tensor,
    labels: np.ndarray,
    mask: np.ndarray,
    reduction: str = "mean",
) -> Tensor:
    """Cross-entropy over the cells whose mask is 1.

    Masked-out cells contribute nothing to the value and receive an exact
    zero gradient, whatever label they carry.

    Args:
        logits: ``[cells, K]`` scores
        labels: ``[cells]`` class indices; ignored where mask is 0
        mask: ``[cells]`` of {0, 1}
        reduction: ``"mean"`` over masked-in cells or ``"sum"``

    Returns:
        Scalar loss tensor

    Raises:
        NoLabeledCellsError: If every cell is masked out
    """
    labels = np.asarray(labels).reshape(-1)
    keep = np.asarray(mask).reshape(-1) > 0
    if logits.ndim != 2 or logits.shape[0] != labels.size or labels.size != keep.size:
        raise ShapeMismatchError(
            f"masked CE: logits {logits.shape}, labels {labels.shape}, mask {keep.shape}"
        )
    count = int(keep.sum())
    if count == 0:
        raise NoLabeledCellsError("no labeled cells")

    safe_labels = np.where(keep, labels, 0).astype(np.intp)
    shifted = logits.data - logits.data.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1))
    picked = shifted[np.arange(labels.size), safe_labels]
    per_cell = np.where(keep, log_norm - picked, 0.0)

    scale = 1.0 / count if reduction == "mean" else 1.0
    out = np.asarray(per_cell.sum() * scale, dtype=logits.data.dtype)

    def _backward(grad):
        probs = softmax(logits.data)
        probs[np.arange(labels.size), safe_labels] -= 1.0
        return (np.where(keep[:, None], probs * (grad * scale), 0.0),)

    return record("masked_softmax_cross_entropy", (logits,), out, _backward)
