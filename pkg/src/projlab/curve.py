"""Direction curves on the sphere and delta-separated direction nets.

A direction curve is a map gamma: [0,1] -> S^2.  The library cares about
curves whose frame (gamma, gamma', gamma'') stays linearly independent;
the determinant margin of that frame is the quantitative non-degeneracy
measure everything downstream relies on.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .dyadic import dyadic_level, spacing_scan
from .errors import DomainError, InfeasibleError, NumericError

SQRT2 = math.sqrt(2.0)

#: default central-difference step; balances truncation against round-off
FD_STEP = 2.0 ** -20


@dataclass(frozen=True)
class Curve:
    """A parametrized direction curve with optional closed-form derivatives.

    `eval_fn` maps an array of parameters to unit vectors, shape (n, 3).
    When `d1`/`d2` are None, derivatives fall back to central finite
    differences with step `h`.  Instances are immutable and safe to share.
    """

    label: str
    eval_fn: Callable[[np.ndarray], np.ndarray]
    d1: Optional[Callable[[np.ndarray], np.ndarray]] = None
    d2: Optional[Callable[[np.ndarray], np.ndarray]] = None
    h: float = FD_STEP

    def points(self, thetas: np.ndarray) -> np.ndarray:
        return self.eval_fn(np.asarray(thetas, dtype=float))

    def deriv1(self, thetas: np.ndarray) -> np.ndarray:
        thetas = np.asarray(thetas, dtype=float)
        if self.d1 is not None:
            return self.d1(thetas)
        return (self.eval_fn(thetas + self.h) - self.eval_fn(thetas - self.h)) / (2 * self.h)

    def deriv2(self, thetas: np.ndarray) -> np.ndarray:
        thetas = np.asarray(thetas, dtype=float)
        if self.d2 is not None:
            return self.d2(thetas)
        # second differences divide by h^2, so the step widens to sqrt(h)
        # to keep round-off at the same level as the first derivative
        h2 = math.sqrt(self.h)
        return (
            self.eval_fn(thetas + h2)
            - 2 * self.eval_fn(thetas)
            + self.eval_fn(thetas - h2)
        ) / h2**2


def model_curve() -> Curve:
    """The model curve theta -> (cos theta, sin theta, 1) / sqrt(2)."""

    def ev(t):
        t = np.atleast_1d(t)
        return np.stack([np.cos(t), np.sin(t), np.ones_like(t)], axis=-1) / SQRT2

    def d1(t):
        t = np.atleast_1d(t)
        return np.stack([-np.sin(t), np.cos(t), np.zeros_like(t)], axis=-1) / SQRT2

    def d2(t):
        t = np.atleast_1d(t)
        return np.stack([-np.cos(t), -np.sin(t), np.zeros_like(t)], axis=-1) / SQRT2

    return Curve("model", ev, d1, d2)


def great_circle() -> Curve:
    """Planar curve theta -> (cos theta, sin theta, 0); degenerate on purpose."""

    def ev(t):
        t = np.atleast_1d(t)
        return np.stack([np.cos(t), np.sin(t), np.zeros_like(t)], axis=-1)

    def d1(t):
        t = np.atleast_1d(t)
        return np.stack([-np.sin(t), np.cos(t), np.zeros_like(t)], axis=-1)

    def d2(t):
        t = np.atleast_1d(t)
        return np.stack([-np.cos(t), -np.sin(t), np.zeros_like(t)], axis=-1)

    return Curve("greatcircle", ev, d1, d2)


def helix_curve() -> Curve:
    """Perturbed helix theta -> normalize(cos theta, sin theta, 1 + 0.2 theta)."""

    def ev(t):
        t = np.atleast_1d(t)
        raw = np.stack([np.cos(t), np.sin(t), 1.0 + 0.2 * t], axis=-1)
        return raw / np.linalg.norm(raw, axis=-1, keepdims=True)

    return Curve("helix", ev)


def curve_from_csv(path) -> Curve:
    """Load a custom curve from a CSV table with rows theta,x,y,z.

    The three coordinates are cubic-interpolated in theta and the result is
    renormalized to the sphere at evaluation time.  Derivatives are taken by
    finite differences.
    """
    from scipy.interpolate import CubicSpline

    thetas, coords = [], []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().lower() == "theta":
                continue
            vals = [float(v) for v in row]
            if len(vals) != 4:
                raise DomainError(f"curve CSV rows need 4 columns, got {len(vals)}")
            thetas.append(vals[0])
            coords.append(vals[1:])
    if len(thetas) < 4:
        raise DomainError("curve CSV needs at least 4 sample rows")
    order = np.argsort(thetas)
    spline = CubicSpline(np.asarray(thetas)[order], np.asarray(coords)[order], axis=0)

    def ev(t):
        raw = spline(np.atleast_1d(t))
        norms = np.linalg.norm(raw, axis=-1, keepdims=True)
        if np.any(norms == 0):
            raise NumericError("interpolated curve passes through the origin")
        return raw / norms

    return Curve("csv", ev)


_NAMED = {
    "model": model_curve,
    "helix": helix_curve,
    "greatcircle": great_circle,
}


def named_curve(name: str) -> Curve:
    try:
        return _NAMED[name]()
    except KeyError:
        raise DomainError(f"unknown curve {name!r}; choose from {sorted(_NAMED)}") from None


def eval_curve(curve: Curve, theta: float) -> np.ndarray:
    """Evaluate the curve at a single parameter in [0, 1]."""
    if not (0.0 <= theta <= 1.0):
        raise DomainError(f"theta must lie in [0, 1], got {theta}")
    return curve.points(np.array([theta]))[0]


def frame(curve: Curve, theta: float):
    """Orthonormal frame (gamma, tangent, normal) at theta.

    tangent = gamma' / |gamma'|, normal = gamma x tangent.  Raises
    NumericError when gamma' vanishes (no frame exists there).
    """
    g = curve.points(np.array([theta]))[0]
    d = curve.deriv1(np.array([theta]))[0]
    n = np.linalg.norm(d)
    if not np.isfinite(n) or n < 1e-12:
        raise NumericError(f"curve {curve.label!r} has no tangent frame at theta={theta}")
    t = d / n
    return g, t, np.cross(g, t)


def nondegeneracy_margin(curve: Curve, n_samples: int) -> float:
    """Min of |det(gamma, gamma', gamma'')| over a uniform parameter grid.

    A margin of 0 flags a degenerate curve.
    """
    if n_samples < 2:
        raise DomainError("n_samples must be at least 2")
    thetas = np.linspace(0.0, 1.0, n_samples)
    g = curve.points(thetas)
    g1 = curve.deriv1(thetas)
    g2 = curve.deriv2(thetas)
    mats = np.stack([g, g1, g2], axis=-2)
    if not np.all(np.isfinite(mats)):
        raise NumericError("non-finite derivative values on the sample grid")
    return float(np.min(np.abs(np.linalg.det(mats))))


@dataclass(frozen=True)
class DirectionNet:
    """A delta-separated set of parameters satisfying a (delta, t) spacing law.

    `c_net` is the constant achieved in the counting condition
    #(net points in a window of length r) <= c_net * (r/delta)^t, recorded
    from an exhaustive scan at construction time.
    """

    delta: float
    t: float
    thetas: np.ndarray
    c_net: float = field(default=float("nan"), compare=False)

    def __len__(self) -> int:
        return int(self.thetas.size)

    @property
    def indices(self) -> np.ndarray:
        return np.round(self.thetas / self.delta).astype(np.int64)


def validate_direction_net(net: DirectionNet):
    """Exhaustive spacing check: all dyadic r, all window starts on the grid.

    Returns (separated, worst_constant, witness).
    """
    k = dyadic_level(net.delta)
    idx = np.sort(net.indices)
    separated = bool(idx.size < 2 or np.min(np.diff(idx)) >= 1)
    worst, witness = spacing_scan(idx, k, net.t)
    return separated, worst, witness


def direction_net(curve: Curve, delta: float, t: float, seed: int) -> DirectionNet:
    """Build a (delta, t)-net of direction parameters in [0, 1].

    For t = 1 the full delta-grid (both endpoints included) is returned.
    For t < 1 a seeded greedy thinning of the grid is used: candidates are
    visited in a seeded random order and accepted while every enclosing
    aligned dyadic window of length 2^-l keeps at most ceil((2^-l/delta)^t)
    accepted points.  The per-window caps form a laminar matroid, so the
    achieved cardinality is the matroid rank regardless of seed.
    """
    k = dyadic_level(delta)
    if not (0.0 <= t <= 1.0):
        raise DomainError(f"spacing exponent t must lie in [0, 1], got {t}")
    n = 2**k
    if t == 1.0:
        thetas = np.arange(n + 1, dtype=np.int64) * delta
    else:
        caps = [math.ceil((2 ** (k - l)) ** t) for l in range(k + 1)]
        counts = [np.zeros(2**l, dtype=np.int64) for l in range(k + 1)]
        rng = np.random.default_rng(seed)
        chosen = []
        for i in rng.permutation(n):
            ok = True
            for l in range(k + 1):
                if counts[l][i >> (k - l)] >= caps[l]:
                    ok = False
                    break
            if ok:
                chosen.append(i)
                for l in range(k + 1):
                    counts[l][i >> (k - l)] += 1
        thetas = np.sort(np.array(chosen, dtype=np.int64)) * delta

    needed = (1.0 / k**2) * delta ** (-t) / 16.0 if k > 0 else 1.0
    if thetas.size < max(1.0, needed):
        raise InfeasibleError(
            f"net of {thetas.size} points misses the target cardinality "
            f"{needed:.3g} at delta=2^-{k}, t={t}"
        )
    net = DirectionNet(delta=delta, t=t, thetas=thetas)
    _, worst, _ = validate_direction_net(net)
    return DirectionNet(delta=delta, t=t, thetas=thetas, c_net=worst)
