"""Central finite differences, the oracle for every backward rule."""

from typing import Callable

import numpy as np

from src.autodiff.tensor import Tensor


def finite_difference_gradient(
    f: Callable[[Tensor], float],
    x: Tensor,
    h: float = 1e-5,
) -> np.ndarray:
    """Estimate ``df/dx`` coordinate by coordinate.

    Args:
        f: Deterministic scalar function of ``x``
        x: Point of evaluation; restored before returning
        h: Step, > 0

    Returns:
        ``(f(x + h e_i) - f(x - h e_i)) / 2h`` for every coordinate i
    """
    flat = x.data.reshape(-1)
    grad = np.zeros(flat.size, dtype=np.float64)
    for i in range(flat.size):
        original = flat[i]
        flat[i] = original + h
        upper = float(f(x))
        flat[i] = original - h
        lower = float(f(x))
        flat[i] = original
        grad[i] = (upper - lower) / (2.0 * h)
    return grad.reshape(x.shape)


def relative_error(actual: np.ndarray, expected: np.ndarray) -> float:
    """Largest absolute deviation, relative to the largest expected magnitude."""
    scale = max(float(np.max(np.abs(expected))), 1e-12) if expected.size else 1.0
    return float(np.max(np.abs(actual - expected))) / scale if actual.size else 0.0
