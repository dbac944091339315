"""Projections onto the line family l_theta, box dimensions, and sweeps.

The projection of a discretized set is snapped back to the same
delta-lattice (round-to-nearest, so symmetric sets stay symmetric), which
makes every downstream count exact integer arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .covering import Covering
from .curve import Curve, frame
from .errors import ConfigurationError, InconsistencyError, RangeError
from .fractal import PointSet

#: default dimension-decision margin: est_dim < s - margin flags theta
DEFAULT_MARGIN = 0.1


@dataclass(frozen=True)
class DimensionFit:
    """Box-counting fit: slope of log2 N(r) against log2(1/r)."""

    scales: np.ndarray  # dyadic r, descending
    counts: np.ndarray  # N(r), non-decreasing as r shrinks
    slope: float
    r2: float


@dataclass(frozen=True)
class SweepRow:
    theta: float
    est_dim: float
    r2: float
    below_s: bool


def _dedup(indices: np.ndarray, weights):
    if indices.shape[1] == 1:  # flat unique is much faster than axis=0
        uniq, inv = np.unique(indices[:, 0], return_inverse=True)
        uniq = uniq[:, None]
    else:
        uniq, inv = np.unique(indices, axis=0, return_inverse=True)
    if weights is None:
        return uniq, None
    w = np.bincount(inv, weights=weights, minlength=len(uniq))
    return uniq, w


def project_line(a: PointSet, curve: Curve, theta: float) -> PointSet:
    """Orthogonal projection x -> x . gamma(theta), snapped to a's lattice.

    Duplicated cells merge and their weights add; all projected values of a
    unit-ball set satisfy |v| <= 1.
    """
    if a.ambient_dim != 3:
        raise ConfigurationError("project_line expects a 3-D set")
    gamma = curve.points(np.array([theta]))[0]
    vals = a.values @ gamma
    idx = np.round(vals / a.delta).astype(np.int64)[:, None]
    uniq, w = _dedup(idx, a.weights)
    return PointSet(
        1, a.delta, uniq, weights=w, nominal_dim=min(1.0, a.nominal_dim),
        domain="ball",
    )


def plane_coordinates(a: PointSet, curve: Curve, theta: float) -> np.ndarray:
    """Exact coordinates of pi_theta(a) in the orthonormal basis of V_theta."""
    g, t, n = frame(curve, theta)
    return np.stack([a.values @ t, a.values @ n], axis=1)


def project_plane(a: PointSet, curve: Curve, theta: float) -> PointSet:
    """Projection onto the plane orthogonal to gamma(theta), lattice-snapped."""
    if a.ambient_dim != 3:
        raise ConfigurationError("project_plane expects a 3-D set")
    coords = plane_coordinates(a, curve, theta)
    idx = np.round(coords / a.delta).astype(np.int64)
    uniq, w = _dedup(idx, a.weights)
    return PointSet(
        2, a.delta, uniq, weights=w, nominal_dim=min(2.0, a.nominal_dim),
        domain="ball",
    )


def box_counts(p: PointSet, level: int) -> int:
    """Number of aligned dyadic cubes of side 2^-level meeting the set."""
    k = p.level
    if level > k:
        raise RangeError("cannot count boxes below the lattice scale")
    return int(np.unique(p.indices >> (k - level), axis=0).shape[0])


def box_dimension(p: PointSet, r_min: float, r_max: float) -> DimensionFit:
    """Least-squares box-counting dimension over dyadic scales in [r_min, r_max]."""
    if len(p) == 0:
        raise ConfigurationError("cannot fit an empty set")
    if r_min < p.delta:
        raise RangeError(f"r_min {r_min} is below the lattice scale {p.delta}")
    if r_max > 1.0:
        raise RangeError("r_max must be at most 1")
    m_lo = int(math.ceil(-math.log2(r_max) - 1e-9))
    m_hi = int(math.floor(-math.log2(r_min) + 1e-9))
    if m_hi - m_lo + 1 < 3:
        raise RangeError(f"need at least 3 dyadic scales in [{r_min}, {r_max}]")
    ms = np.arange(m_lo, m_hi + 1)
    counts = np.array([box_counts(p, int(m)) for m in ms], dtype=float)
    xs = ms.astype(float)  # log2(1/r)
    ys = np.log2(counts)
    slope, intercept = np.polyfit(xs, ys, 1)
    resid = ys - (slope * xs + intercept)
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - float(np.sum(resid**2)) / ss_tot
    return DimensionFit(
        scales=2.0 ** (-ms.astype(float)),
        counts=counts,
        slope=float(slope),
        r2=float(r2),
    )


def select_scale(cov: Covering, weighted: PointSet) -> int:
    """Smallest covering level j whose cubes capture mass >= 1/(10 j^2).

    `weighted` must be a weighted set on the same coordinate axis as the
    covering; a level always exists because the per-level masses sum to 1
    while sum_j 1/(10 j^2) < 1.
    """
    if weighted.weights is None:
        raise ConfigurationError("select_scale needs a weighted set")
    k = weighted.level
    cells = weighted.indices
    remaining = np.ones(len(cells), dtype=bool)
    masses = {}
    for j in sorted(cov.levels):
        idx = cov.levels[j]
        if j > k:
            raise InconsistencyError("covering finer than the set lattice")
        cubes = set(map(tuple, idx.tolist()))
        anc = cells >> (k - j)
        hit = np.array([tuple(r) in cubes for r in anc.tolist()])
        masses[j] = float(weighted.weights[hit & remaining].sum())
        remaining &= ~hit
    if remaining.any():
        raise InconsistencyError(
            f"covering misses cells of total mass {weighted.weights[remaining].sum():.3g}"
        )
    for j in sorted(masses):
        if j >= 1 and masses[j] >= 1.0 / (10 * j * j):
            return j
    raise InconsistencyError("pigeonhole failed; covering masses inconsistent")


def theorem_bound(s: float, alpha: float) -> float:
    """Upper bound max{0, 1 + (s - alpha)/2} for the exceptional-set dimension."""
    return max(0.0, 1.0 + (s - alpha) / 2.0)


def _auto_fit_range(delta: float):
    k = round(-math.log2(delta))
    if k >= 6:
        return 4 * delta, 2.0**-2  # drop the two noisiest octaves at each end
    if k >= 3:
        return delta, 2.0**-1
    return delta, 1.0


def exceptional_sweep(
    a: PointSet,
    curve: Curve,
    s: float,
    theta_grid: int = 256,
    margin: float = DEFAULT_MARGIN,
    fit_range=None,
):
    """Estimate dim rho_theta(a) across a uniform theta grid.

    Returns (rows, summary): one SweepRow per theta = i/theta_grid, and a
    summary with the exceptional fraction, a box fit of the flagged theta
    set, and the comparison bound max{0, 1 + (s - alpha)/2}.
    """
    if theta_grid < 2:
        raise ConfigurationError("theta_grid must be at least 2")
    r_min, r_max = fit_range if fit_range is not None else _auto_fit_range(a.delta)
    rows = []
    for i in range(theta_grid):
        theta = i / theta_grid
        fit = box_dimension(project_line(a, curve, theta), r_min, r_max)
        rows.append(
            SweepRow(
                theta=theta,
                est_dim=fit.slope,
                r2=fit.r2,
                below_s=bool(fit.slope < s - margin),
            )
        )
    flagged = [r.theta for r in rows if r.below_s]
    frac = len(flagged) / theta_grid
    exc_fit = 0.0
    if flagged:
        k_theta = max(3, math.ceil(math.log2(theta_grid)))
        idx = np.unique(
            np.round(np.array(flagged) * 2**k_theta).astype(np.int64)
        )[:, None]
        exc_set = PointSet(1, 2.0**-k_theta, idx, nominal_dim=1.0)
        try:
            exc_fit = box_dimension(exc_set, 4 * exc_set.delta, 0.25).slope
        except RangeError:
            exc_fit = 0.0
    summary = {
        "s": s,
        "alpha": a.nominal_dim,
        "bound": theorem_bound(s, a.nominal_dim),
        "exceptional_fraction": frac,
        "exceptional_dim_fit": exc_fit,
    }
    return rows, summary
