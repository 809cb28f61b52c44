"""Containment distances between point multisets.

The asymmetric distance ``d_as(S, T)`` is the minimum total Euclidean cost of
matching every point of ``S`` injectively to a point of ``T`` -- the earth
mover distance from ``S`` to its closest equal-cardinality sub-multiset of
``T``.  It vanishes exactly when ``S`` is contained in ``T``, and it grades
near-containment: small values mean ``S`` is close to some sub-multiset.

``padded_wasserstein(S, T, k, z)`` is the symmetric companion: both multisets
are padded to cardinality ``k`` with copies of a far-away point ``z`` and
matched optimally.

Both reduce to a rectangular min-cost assignment, solved exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .multiset import RealMultiset

__all__ = [
    "CostMatrix",
    "Coupling",
    "assignment_solve",
    "d_as",
    "padded_wasserstein",
]

# Slack used when comparing float assignment costs for optimality ties.
_COST_TIE_TOL = 1e-9


@dataclass(frozen=True)
class CostMatrix:
    """A non-negative rectangular cost matrix with optional row/col labels."""

    costs: np.ndarray
    row_labels: tuple | None = None
    col_labels: tuple | None = None

    def __post_init__(self) -> None:
        c = np.asarray(self.costs, dtype=np.float64)
        if c.ndim != 2:
            raise ValueError("costs must be a matrix")
        if not np.all(np.isfinite(c)):
            raise ValueError("costs must be finite")
        if np.any(c < 0):
            raise ValueError("costs must be non-negative")
        object.__setattr__(self, "costs", c)


@dataclass(frozen=True)
class Coupling:
    """An injective assignment of rows to columns and its total cost."""

    map: tuple[int, ...]
    total_cost: float

    def __post_init__(self) -> None:
        if len(set(self.map)) != len(self.map):
            raise ValueError("coupling must be injective")


def _solve_raw(costs: np.ndarray) -> float:
    rows, cols = linear_sum_assignment(costs)
    return float(costs[rows, cols].sum())


def assignment_solve(costs: np.ndarray | CostMatrix) -> Coupling:
    """Exact min-total-cost injective assignment of rows to columns.

    Requires rows <= cols.  Among all optimal assignments, returns the
    lexicographically smallest map (row 0 gets the smallest usable column,
    then row 1, ...), so results are reproducible regardless of solver
    internals.
    """
    if isinstance(costs, CostMatrix):
        c = costs.costs
    else:
        c = np.asarray(costs, dtype=np.float64)
        if c.ndim != 2:
            raise ValueError("costs must be a matrix")
    n_rows, n_cols = c.shape
    if n_rows > n_cols:
        raise ValueError("pad or swap: assignment needs rows <= cols")
    if n_rows == 0:
        return Coupling((), 0.0)

    best = _solve_raw(c)
    tol = _COST_TIE_TOL * max(1.0, abs(best))

    # Fix rows one at a time to the smallest column that keeps the total
    # optimal; each feasibility check is a solve on the remaining submatrix.
    chosen: list[int] = []
    free_cols = list(range(n_cols))
    fixed_cost = 0.0
    for i in range(n_rows):
        rest = c[np.ix_(range(i + 1, n_rows), free_cols)]
        found = False
        for idx, col in enumerate(free_cols):
            sub_cost = 0.0 if rest.shape[0] == 0 else _solve_raw(np.delete(rest, idx, axis=1))
            cand = fixed_cost + c[i, col] + sub_cost
            if cand <= best + tol:
                chosen.append(col)
                fixed_cost += c[i, col]
                free_cols.pop(idx)
                found = True
                break
        if not found:  # pragma: no cover - defensive; optimum always extendable
            raise RuntimeError("assignment refinement failed to extend an optimal map")
    return Coupling(tuple(chosen), best)


def _euclidean_costs(s: RealMultiset, t: RealMultiset) -> np.ndarray:
    diff = s.to_array()[:, None, :] - t.to_array()[None, :, :]
    return np.linalg.norm(diff, axis=2)


def d_as(s: RealMultiset, t: RealMultiset) -> float:
    """Asymmetric containment distance from ``s`` to ``t``.

    Minimum over injective matchings of the summed Euclidean distances
    ``sum_i ||x_i - y_map(i)||``.  Zero iff ``s`` is an exact sub-multiset
    of ``t``.  Requires ``|s| <= |t|``.
    """
    if s.dim != t.dim:
        raise ValueError("dim mismatch")
    if s.cardinality() > t.cardinality():
        raise ValueError("|S| must be <= |T| for the asymmetric distance")
    if s.cardinality() == 0:
        return 0.0
    return assignment_solve(_euclidean_costs(s, t)).total_cost


def padded_wasserstein(
    s: RealMultiset,
    t: RealMultiset,
    k: int,
    z: np.ndarray | None = None,
    bound: float = 1.0,
) -> float:
    """Symmetric matching distance after padding both multisets to size ``k``.

    Pads with copies of the far point ``z`` (default ``(3*bound, 0, ..., 0)``)
    and returns the optimal ``k x k`` matching cost.  ``z`` must satisfy
    ``||z|| >= 3 * bound`` so that padding never competes with genuine points
    of a ``bound``-normed ground set.
    """
    if s.dim != t.dim:
        raise ValueError("dim mismatch")
    if s.cardinality() > k or t.cardinality() > k:
        raise ValueError(f"cardinality exceeds k={k}")
    d = s.dim
    if z is None:
        z = np.zeros(d, dtype=np.float64)
        z[0] = 3.0 * bound
    else:
        z = np.asarray(z, dtype=np.float64)
        if z.shape != (d,):
            raise ValueError("padding point has wrong dimension")
        if np.linalg.norm(z) < 3.0 * bound:
            raise ValueError("padding point too close: need ||z|| >= 3 * bound")
    if k == 0:
        return 0.0

    def padded(m: RealMultiset) -> np.ndarray:
        pts = m.to_array()
        pad = np.tile(z, (k - m.cardinality(), 1))
        return np.vstack([pts, pad]) if pts.size else pad

    ps, pt = padded(s), padded(t)
    costs = np.linalg.norm(ps[:, None, :] - pt[None, :, :], axis=2)
    return assignment_solve(costs).total_cost
