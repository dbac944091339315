"""Multi-scale dyadic coverings with an s-dimensional counting condition.

A covering is a disjoint family of dyadic cubes, a few per level, that
covers a target point set while keeping sum r(D)^s below a budget and
never packing more than 2^((k-l)s) level-k cubes into any level-l cube.
The greedy merge below replaces the transfinite maximality argument: it
exchanges any violating batch of fine cubes for their common ancestor,
which strictly shrinks both the budget and the cube count.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigurationError, InconsistencyError, InfeasibleError, RangeError
from .fractal import PointSet

#: slack for budget comparisons in double precision
BUDGET_SLACK = 1e-12


@dataclass(frozen=True)
class Covering:
    """Per-level lists of dyadic cube indices plus the (s, epsilon) contract.

    `levels` maps level k -> integer index array of shape (n_k, dim); the
    cube with index i at level k is prod_j [i_j 2^-k, (i_j+1) 2^-k).
    """

    ambient_dim: int
    s: float
    epsilon: float
    levels: dict
    target: Optional[PointSet] = field(default=None, compare=False)

    def budget_value(self) -> float:
        return float(
            sum((2.0**-k) ** self.s * len(idx) for k, idx in self.levels.items())
        )

    def cube_count(self) -> int:
        return int(sum(len(idx) for idx in self.levels.values()))

    def single_level(self) -> int:
        ks = [k for k, idx in self.levels.items() if len(idx)]
        if len(ks) != 1:
            raise ConfigurationError(f"covering spans levels {sorted(ks)}, need one")
        return ks[0]


@dataclass(frozen=True)
class CoveringReport:
    cover_ok: bool
    disjoint_ok: bool
    budget_value: float
    budget_ok: bool
    worst_condition3_ratio: float
    witness: Optional[tuple]


def _cell_level(x: PointSet) -> int:
    return x.level


def _shift(x: PointSet) -> int:
    """Index offset making all lattice indices nonnegative (ball domains)."""
    return 2**x.level if x.domain == "ball" else 0


def greedy_cover(
    x: PointSet, s: float, epsilon: float, min_level: int = 1
) -> Covering:
    """Build a covering of x satisfying the s-dimensional condition.

    Starts from the finest-level cover (the cells of x themselves) and
    repeatedly exchanges: whenever some permitted coarser cube D would
    contain more than 2^((k-l)s) chosen level-k cubes, all chosen cubes
    inside D are replaced by D.  Scans run coarse-to-fine in lexicographic
    cube order, so the result is deterministic.  Permitted levels are
    min_level < k <= k_max with 2^-k_max = x.delta.

    Raises InfeasibleError when the finest cover already exceeds the
    budget (the set is at least s-dimensional at this resolution) or when
    a counting violation at a level at or below min_level cannot be fixed
    inside the permitted range.
    """
    k_max = _cell_level(x)
    if min_level >= k_max:
        raise RangeError(f"min_level {min_level} >= finest level {k_max}")
    if len(x) == 0:
        raise ConfigurationError("cannot cover an empty set")
    finest_budget = len(x) * (2.0**-k_max) ** s
    if finest_budget > epsilon + BUDGET_SLACK:
        raise InfeasibleError(
            f"finest-level budget {finest_budget:.4g} exceeds epsilon={epsilon}; "
            f"the set looks at least {s}-dimensional at delta=2^-{k_max}"
        )
    off = _shift(x)
    # chosen[k] = set of index tuples at level k (shifted to be nonnegative)
    chosen = {k: set() for k in range(min_level + 1, k_max + 1)}
    chosen[k_max] = set(map(tuple, (x.indices + off).tolist()))

    changed = True
    while changed:
        changed = False
        for l in range(min_level + 1, k_max):  # coarse-to-fine merge targets
            cap_by_k = {
                k: 2.0 ** ((k - l) * s) for k in range(l + 1, k_max + 1)
            }
            # group chosen fine cubes by their level-l ancestor
            ancestors = {}
            for k in range(l + 1, k_max + 1):
                for c in chosen[k]:
                    D = tuple(v >> (k - l) for v in c)
                    ancestors.setdefault(D, {}).setdefault(k, 0)
                    ancestors[D][k] += 1
            for D in sorted(ancestors):
                if any(
                    ancestors[D][k] > cap_by_k[k] + BUDGET_SLACK for k in ancestors[D]
                ):
                    # exchange: D replaces every chosen cube inside it
                    for k in range(l + 1, k_max + 1):
                        chosen[k] = {
                            c
                            for c in chosen[k]
                            if tuple(v >> (k - l) for v in c) != D
                        }
                    chosen[l].add(D)
                    changed = True
            if changed:
                break  # restart coarse-to-fine after any exchange

    levels = {
        k: np.array(sorted(cubes), dtype=np.int64).reshape(len(cubes), x.ambient_dim) - (off >> (k_max - k) if off else 0)
        for k, cubes in chosen.items()
        if cubes
    }
    cov = Covering(x.ambient_dim, s, epsilon, levels, target=x)
    report = validate_covering(cov)
    if not report.cover_ok or not report.disjoint_ok:
        raise InconsistencyError(f"internal covering invariant broken: {report}")
    if report.budget_value > epsilon + BUDGET_SLACK:
        raise InfeasibleError(f"budget {report.budget_value:.4g} exceeds {epsilon}")
    if report.worst_condition3_ratio > 1.0 + BUDGET_SLACK:
        raise InfeasibleError(
            "counting condition cannot be satisfied above min_level="
            f"{min_level}: witness {report.witness}"
        )
    return cov


def single_level_covering(x: PointSet, s: float, level: Optional[int] = None) -> Covering:
    """The trivial covering of x by its own cubes at one level (default finest)."""
    k = x.level if level is None else level
    if level is not None and level > x.level:
        raise RangeError("covering level cannot be finer than the lattice")
    cubes = np.unique(x.indices >> (x.level - k), axis=0)
    budget = len(cubes) * (2.0**-k) ** s
    return Covering(x.ambient_dim, s, budget, {k: cubes}, target=x)


def validate_covering(c: Covering) -> CoveringReport:
    """Exhaustively verify cover, disjointness, budget and condition (3).

    worst_condition3_ratio maximizes count / 2^((k-l)s) over every pair of
    levels l < k and every level-l lattice cube D (including levels coarser
    than the covering's own range, down to l = 0).
    """
    ks = sorted(k for k, idx in c.levels.items() if len(idx))
    budget = c.budget_value()

    # condition (3): for every pair l < k, group level-k cubes by level-l ancestor
    worst, witness = 0.0, None
    for k in ks:
        idx = c.levels[k]
        for l in range(0, k):
            anc = idx >> (k - l)
            u, counts = np.unique(anc, axis=0, return_counts=True)
            ratio = counts.max() / 2.0 ** ((k - l) * c.s)
            if ratio > worst:
                worst = float(ratio)
                witness = (l, k, tuple(u[int(np.argmax(counts))].tolist()))

    # disjointness: no chosen cube strictly inside another chosen cube
    disjoint = True
    chosen_sets = {k: set(map(tuple, c.levels[k].tolist())) for k in ks}
    for i, l in enumerate(ks):
        for k in ks[i + 1 :]:
            for cube in chosen_sets[k]:
                if tuple(v >> (k - l) for v in cube) in chosen_sets[l]:
                    disjoint = False
                    witness = witness or (l, k, cube)

    # cover check against the recorded target
    cover_ok = True
    if c.target is not None:
        cells = c.target.indices
        k_cell = c.target.level
        covered = np.zeros(len(cells), dtype=bool)
        for k in ks:
            anc = cells >> (k_cell - k) if k <= k_cell else None
            if anc is None:
                raise InconsistencyError("covering finer than the target lattice")
            cubes = chosen_sets[k]
            for i, row in enumerate(map(tuple, anc.tolist())):
                if row in cubes:
                    covered[i] = True
        cover_ok = bool(covered.all())
        if not cover_ok:
            missing = cells[~covered][0]
            witness = ("uncovered", tuple(missing.tolist()))

    return CoveringReport(
        cover_ok=cover_ok,
        disjoint_ok=disjoint,
        budget_value=budget,
        budget_ok=bool(budget <= c.epsilon + BUDGET_SLACK),
        worst_condition3_ratio=worst,
        witness=witness,
    )


def dyadic_content(x: PointSet, t: float, max_level: int) -> float:
    """Exact optimum of sum r(D)^t over dyadic coverings up to max_level.

    Bottom-up tree recursion content(node) = min(r^t, sum children); an
    upper bound for the t-dimensional Hausdorff content up to the usual
    lattice-versus-ball constant.
    """
    if max_level < 0:
        raise RangeError("max_level must be >= 0")
    k = x.level
    if len(x) == 0:
        return 0.0
    off = _shift(x)
    if max_level <= k:
        nodes = np.unique((x.indices + off) >> (k - max_level), axis=0)
    else:
        # refine below the lattice: the cell point i*delta lies on the level-m
        # cube boundary, i.e. in cube i << (m-k)
        nodes = np.unique((x.indices + off) << (max_level - k), axis=0)
    content = np.full(len(nodes), (2.0**-max_level) ** t)
    for l in range(max_level - 1, -1, -1):
        parents = nodes >> 1
        uniq, inv = np.unique(parents, axis=0, return_inverse=True)
        sums = np.bincount(inv, weights=content)
        content = np.minimum((2.0**-l) ** t, sums)
        nodes = uniq
    return float(content.sum())


# ----------------------------------------------------------------------------
# serialization


def covering_to_json(c: Covering) -> str:
    payload = {
        "s": c.s,
        "epsilon": c.epsilon,
        "levels": [
            {"k": int(k), "cubes": c.levels[k].tolist()}
            for k in sorted(c.levels)
            if len(c.levels[k])
        ],
    }
    return json.dumps(payload, sort_keys=True)


def covering_from_json(text: str, ambient_dim: int) -> Covering:
    payload = json.loads(text)
    levels = {
        int(entry["k"]): np.asarray(entry["cubes"], dtype=np.int64).reshape(
            len(entry["cubes"]), ambient_dim
        )
        for entry in payload["levels"]
    }
    return Covering(ambient_dim, float(payload["s"]), float(payload["epsilon"]), levels)
