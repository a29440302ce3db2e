"""Otsu threshold selection on 256-bin histograms."""

from typing import Sequence

import numpy as np

from src.utils.exceptions import DegenerateHistogramError, ValidationError


def otsu_threshold(histogram: Sequence[int]) -> int:
    """Threshold maximizing the between-class variance.

    Class 0 holds bins ``<= t``, class 1 bins ``> t``. Scores are compared as
    exact integer fractions, so the lowest maximizing ``t`` wins ties.

    Args:
        histogram: 256 non-negative bin counts

    Returns:
        Threshold in 0..255

    Raises:
        DegenerateHistogramError: If fewer than two bins are occupied
    """
    counts = [int(c) for c in np.asarray(histogram).reshape(-1)]
    if len(counts) != 256 or any(c < 0 for c in counts):
        raise ValidationError("histogram must have 256 non-negative bins")
    if sum(1 for c in counts if c > 0) < 2:
        raise DegenerateHistogramError("degenerate histogram")

    total = sum(counts)
    total_mass = sum(i * c for i, c in enumerate(counts))

    best_t, best_num, best_den = 0, 0, 1
    n0 = s0 = 0
    for t, count in enumerate(counts):
        n0 += count
        s0 += t * count
        n1 = total - n0
        if n0 == 0 or n1 == 0:
            continue
        # proportional to n0*n1*(mu0 - mu1)^2
        num = (s0 * total - total_mass * n0) ** 2
        den = n0 * n1
        if num * best_den > best_num * den:
            best_t, best_num, best_den = t, num, den
    return best_t
