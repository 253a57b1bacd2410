"""Curve features used for figure-style summaries: crossings and extrema."""
from __future__ import annotations

from itertools import combinations

import numpy as np

__all__ = ["crossings", "pairwise_crossings", "interior_minima", "interior_maxima", "has_interior_minimum"]


def crossings(x, y1, y2) -> list[float]:
    """Abscissae where y1 - y2 changes sign, linearly interpolated."""
    x = np.asarray(x, float)
    d = np.asarray(y1, float) - np.asarray(y2, float)
    out = []
    for i in range(len(d) - 1):
        a, b = d[i], d[i + 1]
        if a == 0.0:
            if i == 0 or np.sign(d[i - 1]) != np.sign(b):
                out.append(float(x[i]))
        elif a * b < 0:
            out.append(float(x[i] - a * (x[i + 1] - x[i]) / (b - a)))
    if len(d) > 1 and d[-1] == 0.0 and d[-2] != 0.0:
        out.append(float(x[-1]))
    return out


def pairwise_crossings(x, curves: dict) -> dict:
    """Crossings for every unordered pair of labelled curves, keys in insertion order."""
    return {(a, b): crossings(x, curves[a], curves[b]) for a, b in combinations(curves, 2)}


def _extrema(y, sign):
    y = sign * np.asarray(y, float)
    return [i for i in range(1, len(y) - 1) if y[i] < y[i - 1] and y[i] <= y[i + 1]]


def interior_minima(y) -> list[int]:
    """Indices of strict local minima away from the grid ends."""
    return _extrema(y, 1.0)


def interior_maxima(y) -> list[int]:
    return _extrema(y, -1.0)


def has_interior_minimum(y) -> bool:
    """True when the global minimum is not at either end of the grid."""
    y = np.asarray(y, float)
    i = int(np.argmin(y))
    return 0 < i < len(y) - 1
