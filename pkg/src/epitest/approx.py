"""Tractable value bounds: sample-point pruning above, interpolation below.

The upper bound runs the exact backup but keeps, per stage, only the vectors
that win at R chosen belief points; shrinking a min-set can only raise the
pointwise minimum, and the Bellman operator preserves that ordering, so the
result dominates the true value function everywhere. The lower bound runs
the backward recursion on grid values only, evaluating next-stage values by
convex-combination interpolation; concavity puts any such interpolant below
the true function. Together they sandwich the exact value function, and the
per-probe gap is the accuracy certificate of the pair.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

import numpy as np
from scipy.optimize import linprog

from .beliefs import Belief
from .errors import CoverageError, SizeCapError, ValidationError
from .exact import AlphaSet, AlphaVector, _reachable_quarantines, evaluate, exact_backup
from .model import (
    EMPTY_QUARANTINE,
    Quarantine,
    _bits_matrix,
    infection_counts,
    kernel_matrix,
)
from .scenario import ScenarioConfig

DEFAULT_MAX_N = 12
GAP_TIGHT = 1e-9


# ---------------------------------------------------------------------------
# belief grids
# ---------------------------------------------------------------------------


@dataclass
class BeliefGrid:
    """An ordered list of belief points on the 2**n simplex.

    ``descriptor`` records how the points were generated, for provenance in
    reports. Corner points (all point-mass beliefs) guarantee every belief is
    inside the convex hull, which the lower bound needs for coverage.
    """

    n: int
    points: list  # dense arrays of length 2**n
    descriptor: str

    def __post_init__(self):
        if not self.points:
            raise ValidationError("belief grid needs at least one point")
        size = 1 << self.n
        for pt in self.points:
            if len(pt) != size:
                raise ValidationError("grid point dimension mismatch")

    def matrix(self) -> np.ndarray:
        return np.stack(self.points)

    def __len__(self):
        return len(self.points)

    @classmethod
    def corners(cls, n: int) -> "BeliefGrid":
        size = 1 << n
        pts = [np.eye(size)[k] for k in range(size)]
        return cls(n, pts, "corner")

    @classmethod
    def uniform_random(cls, n: int, r: int, seed: int) -> "BeliefGrid":
        rng = np.random.default_rng(seed)
        pts = [rng.dirichlet(np.ones(1 << n)) for _ in range(r)]
        return cls(n, pts, f"uniform-random({r},seed={seed})")

    @classmethod
    def regular(cls, n: int, m: int, max_points: int = 20000) -> "BeliefGrid":
        """All beliefs with probabilities in multiples of 1/m."""
        size = 1 << n
        from math import comb

        count = comb(m + size - 1, size - 1)
        if count > max_points:
            raise SizeCapError(
                f"regular grid would hold {count} points (cap {max_points})"
            )
        pts = []
        for cuts in combinations(range(m + size - 1), size - 1):
            parts = np.diff((-1,) + cuts + (m + size - 1,)) - 1
            pts.append(parts / m)
        return cls(n, pts, f"regular-grid(m={m})")

    @classmethod
    def corners_plus_random(cls, n: int, r: int, seed: int) -> "BeliefGrid":
        base = cls.corners(n)
        extra = cls.uniform_random(n, r, seed) if r > 0 else None
        pts = base.points + (extra.points if extra else [])
        return cls(n, pts, f"corner+uniform-random({r},seed={seed})")


def nested_grid_ladder(n: int, sizes: Sequence[int], seed: int):
    """Grids sharing one random draw: each holds all corners plus the first
    R interior points, so larger grids are supersets of smaller ones."""
    sizes = list(sizes)
    master = BeliefGrid.uniform_random(n, max(sizes), seed) if max(sizes) > 0 else None
    corners = BeliefGrid.corners(n)
    out = []
    for r in sizes:
        pts = corners.points + (master.points[:r] if master else [])
        out.append(BeliefGrid(n, pts, f"corner+uniform-random({r},seed={seed})"))
    return out


# ---------------------------------------------------------------------------
# upper bound: backup + sample-point pruning
# ---------------------------------------------------------------------------


def prune_at_points(aset: AlphaSet, grid: BeliefGrid) -> AlphaSet:
    """Keep exactly the vectors that achieve the minimum at some grid point.

    Ties at a point go to the lowest vector index; kept vectors stay in their
    original order. The pruned set agrees with the full set at every grid
    point by construction.
    """
    dots = aset.matrix() @ grid.matrix().T  # |set| x R
    winners = sorted(set(int(i) for i in np.argmin(dots, axis=0)))
    vectors = [aset.vectors[i] for i in winners]
    return AlphaSet(vectors, t=aset.t, quarantine=aset.quarantine)


@dataclass
class UpperBound:
    """Per-(stage, quarantine) pruned alpha sets; dominates the true value."""

    n: int
    horizon: int
    grid: BeliefGrid
    table: dict  # (t, frozenset) -> AlphaSet

    def alpha_set(self, t: int, q: Quarantine = EMPTY_QUARANTINE) -> AlphaSet:
        return self.table[(t, frozenset(q))]

    def value(self, t: int, b, q: Quarantine = EMPTY_QUARANTINE) -> float:
        return evaluate(self.alpha_set(t, q), b).value


def approx_solve_upper(
    cfg: ScenarioConfig, grid: BeliefGrid, max_n: int = DEFAULT_MAX_N
) -> UpperBound:
    """Backward recursion with sample-point pruning after every backup."""
    if cfg.n > max_n:
        raise SizeCapError(f"approximate solver capped at N <= {max_n}, got {cfg.n}")
    if grid.n != cfg.n:
        raise ValidationError("grid dimension does not match the scenario")
    T = cfg.horizon
    c = infection_counts(cfg.n)
    table = {}
    for q in _reachable_quarantines(cfg.n, T - 1):
        table[(T, q)] = AlphaSet([AlphaVector(c.copy(), 0)], t=T, quarantine=q)
    for t in range(T - 1, 0, -1):
        g = cfg.graph_at(t)
        nxt = {q: aset for (tt, q), aset in table.items() if tt == t + 1}
        for q in _reachable_quarantines(cfg.n, t - 1):
            table[(t, q)] = prune_at_points(exact_backup(nxt, g, q, cfg.p, cfg.lam), grid)
    return UpperBound(cfg.n, T, grid, table)


# ---------------------------------------------------------------------------
# lower bound: grid-value recursion with convex interpolation
# ---------------------------------------------------------------------------


class _HullInterpolator:
    """Best certified value of a belief as a convex combination of grid points.

    Solves max sum(mu * v) over mu >= 0 with grid^T mu = b, sum mu = 1; any
    feasible mu certifies a lower bound (concavity), and the maximum is the
    tightest certificate the grid can give. Infeasibility means the belief
    lies outside the grid's hull.
    """

    def __init__(self, grid: BeliefGrid):
        self.grid = grid
        pts = grid.matrix()
        self._a_eq = np.vstack([pts.T, np.ones(len(grid))])
        self._cache = {}

    def _solve(self, b: np.ndarray, values: np.ndarray) -> float:
        key = (values.tobytes(), np.round(b, 12).tobytes())
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        res = linprog(
            -values,
            A_eq=self._a_eq,
            b_eq=np.concatenate([b, [1.0]]),
            bounds=(0.0, None),
            method="highs",
        )
        if res.status != 0:
            raise CoverageError(b)
        out = float(-res.fun)
        self._cache[key] = out
        return out

    def value(self, b: np.ndarray, values: np.ndarray) -> float:
        return self._solve(np.asarray(b, dtype=float), np.asarray(values, dtype=float))


@dataclass
class LowerBound:
    """Grid-value tables per (stage, quarantine); lies below the true value
    wherever the interpolation certificate exists."""

    n: int
    horizon: int
    grid: BeliefGrid
    tables: dict  # (t, frozenset) -> np.ndarray of per-point values
    _interp: _HullInterpolator = field(repr=False)

    def grid_values(self, t: int, q: Quarantine = EMPTY_QUARANTINE) -> np.ndarray:
        return self.tables[(t, frozenset(q))]

    def value(self, t: int, b, q: Quarantine = EMPTY_QUARANTINE) -> float:
        dense = b.dense() if hasattr(b, "dense") else np.asarray(b, dtype=float)
        return self._interp.value(dense, self.grid_values(t, q))


def _branch_children(bf: np.ndarray, g, q: Quarantine, u: int, p: float, n: int):
    """(probability, next dense belief, next quarantine) per observation
    branch of testing u from dense belief bf; single branch for u = 0."""
    if u == 0:
        P = kernel_matrix(g, q, q, p)
        return [(1.0, P.T @ bf, q)]
    bits = _bits_matrix(n)[:, u - 1]
    p1 = float(bf @ bits)
    out = []
    if p1 > 0.0:
        pos = (bf * bits) / p1
        P = kernel_matrix(g, q, q | {u}, p)
        out.append((p1, P.T @ pos, q | {u}))
    if p1 < 1.0:
        neg = (bf * (1.0 - bits)) / (1.0 - p1)
        P = kernel_matrix(g, q, q, p)
        out.append((1.0 - p1, P.T @ neg, q))
    return out


def approx_solve_lower(
    cfg: ScenarioConfig, grid: BeliefGrid, max_n: int = DEFAULT_MAX_N
) -> LowerBound:
    """Backward recursion restricted to grid points.

    Raises CoverageError (naming the belief) if some branch belief leaves the
    grid's convex hull; including all corners in the grid rules that out.
    """
    if cfg.n > max_n:
        raise SizeCapError(f"approximate solver capped at N <= {max_n}, got {cfg.n}")
    if grid.n != cfg.n:
        raise ValidationError("grid dimension does not match the scenario")
    T = cfg.horizon
    c = infection_counts(cfg.n)
    interp = _HullInterpolator(grid)
    pts = grid.matrix()
    tables = {}
    for q in _reachable_quarantines(cfg.n, T - 1):
        tables[(T, q)] = pts @ c
    for t in range(T - 1, 0, -1):
        g = cfg.graph_at(t)
        for q in _reachable_quarantines(cfg.n, t - 1):
            vals = np.empty(len(grid))
            for r, bf in enumerate(grid.points):
                stage = float(bf @ c)
                best = None
                for u in range(0, cfg.n + 1):
                    if u != 0 and u in q:
                        continue
                    cost = cfg.lam if u != 0 else 0.0
                    for prob, child, q_next in _branch_children(bf, g, q, u, cfg.p, cfg.n):
                        cost += prob * interp.value(child, tables[(t + 1, q_next)])
                    if best is None or cost < best:
                        best = cost
                vals[r] = stage + best
            tables[(t, q)] = vals
    return LowerBound(cfg.n, T, grid, tables, interp)


# ---------------------------------------------------------------------------
# the sandwich
# ---------------------------------------------------------------------------


@dataclass
class GapRow:
    t: int
    probe: int
    lower: float
    upper: float

    @property
    def gap(self) -> float:
        return self.upper - self.lower

    @property
    def tight(self) -> bool:
        return self.gap < GAP_TIGHT


@dataclass
class SandwichResult:
    """Both bounds plus the per-(stage, probe) gap report."""

    upper: UpperBound
    lower: LowerBound
    rows: list
    violations: list  # rows where lower exceeded upper beyond tolerance

    def gap_at(self, t: int, probe: int) -> float:
        for row in self.rows:
            if row.t == t and row.probe == probe:
                return row.gap
        raise KeyError((t, probe))


def sandwich(
    cfg: ScenarioConfig,
    grid: BeliefGrid,
    probes: Sequence[Belief],
    tol: float = 1e-9,
) -> SandwichResult:
    """Compute both bounds and evaluate them at every probe and stage.

    Rows where the lower bound exceeds the upper beyond tolerance land in
    ``violations``; by construction that list should stay empty, and a
    non-empty one signals an internal inconsistency to the caller.
    """
    ub = approx_solve_upper(cfg, grid)
    lb = approx_solve_lower(cfg, grid)
    rows = []
    violations = []
    for t in range(1, cfg.horizon + 1):
        for pi, b in enumerate(probes):
            row = GapRow(t, pi, lb.value(t, b), ub.value(t, b))
            rows.append(row)
            if row.lower > row.upper + tol:
                violations.append(row)
    return SandwichResult(ub, lb, rows, violations)
