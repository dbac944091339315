"""Dyadic-scale helpers shared by the lattice-based modules.

All scale arithmetic in the library runs on exact powers of two, so scans
can work on integer lattice indices and stay free of float round-off.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DomainError


def dyadic_level(delta: float) -> int:
    """Return k such that delta == 2**-k, or raise if delta is not dyadic."""
    if not (0 < delta <= 1):
        raise DomainError(f"delta must lie in (0, 1], got {delta}")
    k = round(math.log2(1.0 / delta))
    if 2.0 ** (-k) != delta:
        raise DomainError(f"delta must be a power of two, got {delta}")
    return k


def nearest_dyadic(x: float) -> float:
    """The power of two 2**-k closest to x in log scale (x in (0, 1])."""
    if not (0 < x <= 1):
        raise DomainError(f"expected x in (0, 1], got {x}")
    k = max(0, round(-math.log2(x)))
    return 2.0 ** (-k)


def max_window_count(indices: np.ndarray, length: int) -> tuple[int, int]:
    """Max number of sorted integer indices in a closed window of `length`.

    Returns (count, window_start_index).  Sliding any real window until its
    left edge hits a point never decreases the count, so anchoring windows
    at the points themselves is an exhaustive scan over lattice positions.
    """
    if indices.size == 0:
        return 0, 0
    ends = np.searchsorted(indices, indices + length, side="right")
    counts = ends - np.arange(indices.size)
    best = int(np.argmax(counts))
    return int(counts[best]), int(indices[best])


def spacing_scan(indices: np.ndarray, k: int, exponent: float):
    """Exhaustive (delta, s)-condition scan of a sorted 1-D index set.

    For every dyadic r = 2**-m (0 <= m <= k, i.e. delta <= r <= 1) and every
    window position on the delta-lattice, compares the point count in the
    closed length-r window against (r/delta)**exponent.

    Returns (worst_ratio, witness) with witness = (r, window_start_value).
    """
    worst = 0.0
    witness = (1.0, 0.0)
    delta = 2.0 ** (-k)
    for m in range(k + 1):
        length = 2 ** (k - m)
        count, start = max_window_count(indices, length)
        ratio = count / float(length) ** exponent
        if ratio > worst:
            worst = ratio
            witness = (2.0 ** (-m), start * delta)
    return worst, witness
