"""Exact order-preserving embeddings for finite ground sets.

An embedding ``F`` of multisets into ``R^m`` is *monotone and separating*
(MAS) on the multisets of cardinality <= k when

    S is contained in T  <=>  F(S) <= F(T)  (elementwise).

For a finite ground set of size n this module provides:

* the one-hot (count vector) embedding, MAS for unbounded cardinality;
* a brute-force verifier that exhaustively checks both directions;
* a randomized non-negative-projection construction that is MAS with
  positive probability once ``m ~ (k+2)^(k+2) ln n``, with a retry loop;
* two constructive refuters that produce explicit violating pairs for
  embeddings whose output dimension is too small, realizing the lower
  bounds ``m >= 2k`` and ``m >= log2(log3 n)``;
* the closed-form dimension bounds, and the degenerate singleton embedding
  over ``[-1, 1]`` that exists only because cardinality-1 multisets carry no
  interactions;
* a finite demonstration that any monotone multiset function factors through
  a MAS embedding via a monotone vector-to-vector map.

Tie-breaking everywhere (argmax of a maximal singleton, subsequence
extraction) is by smallest element id so witnesses are reproducible.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Iterator, Mapping

import numpy as np

from .multiset import (
    DEFAULT_ENUMERATION_CAP,
    EnumerationCapError,
    Multiset,
    enumerate_multisets,
    is_subset,
)

__all__ = [
    "EmbeddingMatrix",
    "MasVerdict",
    "DimensionBounds",
    "RandomProjectionError",
    "MonotoneValidationError",
    "onehot_mas",
    "verify_mas",
    "extreme_pairs",
    "random_projection_mas",
    "refute_maximal_singleton",
    "refute_monotone_chain",
    "degenerate_k1_embedding",
    "dimension_bounds",
    "MonotoneExtension",
    "monotone_extension_demo",
]


@dataclass(frozen=True)
class EmbeddingMatrix:
    """A linear multiset embedding ``F(S) = W @ counts(S)`` with ``W >= 0``.

    Non-negativity of the weights makes monotonicity structural: adding an
    element can only increase every output coordinate.
    """

    weights: np.ndarray

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 2 or w.shape[0] < 1 or w.shape[1] < 1:
            raise ValueError("weights must be a non-empty matrix")
        if np.any(w < 0):
            raise ValueError("weights must be non-negative")
        object.__setattr__(self, "weights", w)

    @property
    def m(self) -> int:
        return self.weights.shape[0]

    @property
    def n(self) -> int:
        return self.weights.shape[1]

    def is_integral(self) -> bool:
        return bool(np.all(self.weights == np.round(self.weights)))

    def evaluate(self, s: Multiset) -> np.ndarray:
        if s.ground_size != self.n:
            raise ValueError(f"multiset over [{s.ground_size}] fed to embedding over [{self.n}]")
        return self.weights @ s.count_vector().astype(np.float64)

    def singleton_table(self) -> np.ndarray:
        """``F({v})`` for every ground element: just the weight columns, shape (n, m)."""
        return self.weights.T.copy()

    def to_json_obj(self) -> dict:
        return {"m": self.m, "n": self.n, "rows": self.weights.tolist()}

    @classmethod
    def from_json_obj(cls, obj: dict) -> "EmbeddingMatrix":
        w = np.asarray(obj["rows"], dtype=np.float64)
        if w.shape != (obj["m"], obj["n"]):
            raise ValueError("embedding shape does not match header")
        return cls(w)


@dataclass(frozen=True)
class MasVerdict:
    """Outcome of exhaustive verification, with a violating pair if any.

    ``violation_kind`` is ``"monotonicity"`` (S contained in T but F(S) not
    dominated) or ``"separability"`` (F(S) dominated but S not contained).
    """

    is_mas: bool
    witness: tuple[Multiset, Multiset] | None = None
    violation_kind: str | None = None

    def __post_init__(self) -> None:
        if self.is_mas and (self.witness is not None or self.violation_kind is not None):
            raise ValueError("a positive verdict carries no witness")
        if not self.is_mas and (self.witness is None or self.violation_kind is None):
            raise ValueError("a negative verdict must carry a witness and kind")

    def to_json_obj(self) -> dict:
        obj: dict = {"is_mas": self.is_mas}
        if self.witness is not None:
            s, t = self.witness
            obj["violation_kind"] = self.violation_kind
            obj["witness"] = {
                "s": [list(p) for p in s.items],
                "t": [list(p) for p in t.items],
            }
        return obj


class RandomProjectionError(RuntimeError):
    """All attempts failed; carries the best attempt's violating extreme pair."""

    def __init__(self, attempts: int, violating_pair: tuple[Multiset, Multiset], separated: int, total: int):
        self.attempts = attempts
        self.violating_pair = violating_pair
        self.separated = separated
        self.total = total
        super().__init__(
            f"no accepted projection after {attempts} attempts; "
            f"best attempt separated {separated}/{total} extreme pairs"
        )


class MonotoneValidationError(ValueError):
    """A function claimed monotone is not; carries a violating pair."""

    def __init__(self, witness: tuple[Multiset, Multiset]):
        self.witness = witness
        super().__init__(f"function not monotone at pair {witness[0]} <= {witness[1]}")


def onehot_mas(n: int) -> EmbeddingMatrix:
    """The count-vector embedding: the n x n identity, MAS for any cardinality."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return EmbeddingMatrix(np.eye(n))


def _embedding_table(e: EmbeddingMatrix, multisets: list[Multiset]) -> np.ndarray:
    counts = np.stack([s.count_vector() for s in multisets])  # (M, n) int64
    if e.is_integral():
        # exact integer arithmetic: comparisons have no rounding at all
        return counts @ e.weights.astype(np.int64).T
    return counts.astype(np.float64) @ e.weights.T


def verify_mas(
    e: EmbeddingMatrix,
    k: int,
    cap: int = DEFAULT_ENUMERATION_CAP,
    slack: float = 0.0,
) -> MasVerdict:
    """Exhaustively check the MAS property on all multisets of cardinality <= k.

    Every ordered pair (S, T) is tested for both directions; the first
    violation in enumeration order (S-index major, T-index minor) is
    returned.  Arithmetic is exact integer when the matrix is integral;
    otherwise float comparisons are used with tolerance 0, plus an optional
    ``slack`` (e.g. 1e-12) to forgive accumulated rounding in random
    matrices.
    """
    multisets = enumerate_multisets(e.n, k, cap=cap)
    counts = np.stack([s.count_vector() for s in multisets])  # (M, n)
    table = _embedding_table(e, multisets)  # (M, m)
    m_count = len(multisets)

    subset = np.zeros((m_count, m_count), dtype=bool)
    dominated = np.zeros((m_count, m_count), dtype=bool)
    for i in range(m_count):
        subset[i] = np.all(counts[i] <= counts, axis=1)
        dominated[i] = np.all(table[i] <= table + slack, axis=1)

    viol_mono = subset & ~dominated
    viol_sep = dominated & ~subset
    viol = viol_mono | viol_sep
    if not viol.any():
        return MasVerdict(is_mas=True)
    i, j = map(int, np.argwhere(viol)[0])
    kind = "monotonicity" if viol_mono[i, j] else "separability"
    return MasVerdict(is_mas=False, witness=(multisets[i], multisets[j]), violation_kind=kind)


def extreme_pairs(n: int, k: int, cap: int = DEFAULT_ENUMERATION_CAP) -> Iterator[tuple[Multiset, Multiset]]:
    """All pairs (S = {x}, T) with |T| = k and x outside T's support.

    These pairs suffice to certify separability of a non-negative linear
    embedding on cardinality <= k: any violating pair reduces to an extreme
    pair by dropping shared copies and padding T.
    """
    if not k < n:
        raise ValueError("extreme pairs require k < n")
    total = n * math.comb(n + k - 2, k)
    if total > cap:
        raise EnumerationCapError(f"enumeration too large: {total} extreme pairs over cap {cap}")
    for x in range(n):
        others = [v for v in range(n) if v != x]
        for combo in itertools.combinations_with_replacement(others, k):
            yield Multiset.from_elements([x], n), Multiset.from_elements(combo, n)


def random_projection_mas(
    n: int,
    k: int,
    m: int,
    seed: int,
    max_attempts: int = 20,
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> tuple[EmbeddingMatrix, int]:
    """Sample non-negative projections until every extreme pair is separated.

    Each attempt draws ``m`` rows i.i.d. uniform on ``[0, 1]^n`` and accepts
    iff for every extreme pair (S = {x}, T) some row gives
    ``<counts(S), a_j> > <counts(T), a_j>``.  Acceptance implies the MAS
    property on all multisets of cardinality <= k.  The PRNG is numpy's
    seeded PCG64, so attempt counts are reproducible.

    Raises :class:`RandomProjectionError` carrying the best attempt's first
    unseparated extreme pair if ``max_attempts`` is exhausted.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    pairs = list(extreme_pairs(n, k, cap=cap))
    x_idx = np.array([s.support()[0] for s, _ in pairs])
    t_counts = np.stack([t.count_vector() for _, t in pairs]).astype(np.float64)  # (P, n)

    rng = np.random.default_rng(seed)
    best_separated = -1
    best_pair_idx = 0
    for attempt in range(1, max_attempts + 1):
        a = rng.random((m, n))
        margins = a[:, x_idx] - a @ t_counts.T  # (m, P)
        separated = (margins > 0).any(axis=0)
        if separated.all():
            return EmbeddingMatrix(a), attempt
        count = int(separated.sum())
        if count > best_separated:
            best_separated = count
            best_pair_idx = int(np.argmin(separated))  # first unseparated pair
    raise RandomProjectionError(max_attempts, pairs[best_pair_idx], best_separated, len(pairs))


def refute_maximal_singleton(e: EmbeddingMatrix, k: int) -> tuple[Multiset, Multiset] | None:
    """Build a separability violation from maximal singletons, if m <= n - 2.

    For each output coordinate pick the ground element whose singleton value
    is largest (the "maximal singleton"); any two leftover elements u1, u2
    oriented so u1 dominates u2 on at least half the coordinates yield
    S = {u2} and T = {u1} + the maximal singletons of the other coordinates.
    T dominates S coordinatewise by construction, so (S, T) violates
    separability whenever it fits the cardinality budget |T| <= k.
    """
    m, n = e.m, e.n
    if m > n - 2:
        return None
    singles = e.singleton_table()  # (n, m); singles[v, i] = F({v})[i]
    v_star = np.argmax(singles, axis=0)  # smallest id wins ties
    outside = [v for v in range(n) if v not in set(int(v) for v in v_star)]
    if len(outside) < 2:
        return None
    u1, u2 = outside[0], outside[1]
    if np.sum(singles[u1] >= singles[u2]) < (m + 1) // 2:
        u1, u2 = u2, u1
    t_elems = {u1} | {int(v_star[j]) for j in range(m) if singles[u1][j] < singles[u2][j]}
    s = Multiset.from_elements([u2], n)
    t = Multiset.from_elements(sorted(t_elems), n)
    if t.cardinality() > k:
        return None
    if np.all(e.evaluate(s) <= e.evaluate(t)):
        return s, t
    return None


def _longest_monotone_subseq(values: np.ndarray, nonincreasing: bool) -> list[int]:
    """Indices of the longest non-strict monotone subsequence.

    Among maximal chains, the lexicographically smallest index sequence is
    returned (greedy reconstruction, smallest index first).
    """
    v = -values if nonincreasing else values
    n = len(v)
    best_from = [1] * n  # chain length starting at i
    for i in range(n - 2, -1, -1):
        for j in range(i + 1, n):
            if v[j] >= v[i] and best_from[j] + 1 > best_from[i]:
                best_from[i] = best_from[j] + 1
    target = max(best_from)
    chain: list[int] = []
    need = target
    lo = 0
    last = None
    while need > 0:
        for i in range(lo, n):
            if best_from[i] == need and (last is None or v[i] >= v[last]):
                chain.append(i)
                last = i
                lo = i + 1
                break
        need -= 1
    return chain


def refute_monotone_chain(e: EmbeddingMatrix) -> tuple[Multiset, Multiset] | None:
    """Find three elements whose singleton values form a coordinatewise chain.

    Sorts the ground elements by the first output coordinate, then repeatedly
    extracts a longest monotone subsequence per remaining coordinate
    (Erdos--Szekeres: each pass keeps at least the square root).  If a chain
    v1, v2, v3 ordered in every coordinate survives, the middle element is
    dominated by the other two together, so S = {v2}, T = {v1, v3} violates
    separability.  A witness is guaranteed whenever n > 3^(2^(m-1)); in
    particular for any 1-dimensional embedding with n >= 3.
    """
    singles = e.singleton_table()  # (n, m)
    n, m = singles.shape
    order = sorted(range(n), key=lambda v: (singles[v, 0], v))
    seq = list(order)
    for coord in range(1, m):
        vals = np.array([singles[v, coord] for v in seq])
        up = _longest_monotone_subseq(vals, nonincreasing=False)
        down = _longest_monotone_subseq(vals, nonincreasing=True)
        pick = up if len(up) >= len(down) else down
        seq = [seq[i] for i in pick]
        if len(seq) < 3:
            return None
    if len(seq) < 3:
        return None
    v1, v2, v3 = seq[0], seq[1], seq[2]
    s = Multiset.from_elements([v2], n)
    t = Multiset.from_elements(sorted({v1, v3}), n)
    if is_subset(s, t):
        return None
    if np.all(e.evaluate(s) <= e.evaluate(t)):
        return s, t
    return None


def degenerate_k1_embedding(x: float | None) -> np.ndarray:
    """The order-preserving embedding of at-most-one-point multisets over [-1, 1].

    Maps the empty multiset to (-1, -1) and {x} to (-x, x).  Distinct
    singletons are incomparable in both directions, and the empty multiset
    sits below everything, so containment is preserved exactly; no such
    embedding exists once two elements are allowed.
    """
    if x is None:
        return np.array([-1.0, -1.0])
    x = float(x)
    if abs(x) > 1.0:
        raise ValueError("singleton value must lie in [-1, 1]")
    return np.array([-x, x])


@dataclass(frozen=True)
class DimensionBounds:
    """Closed-form bounds on the smallest MAS output dimension.

    ``feasible`` is False exactly for an infinite ground set with k >= 2,
    where no finite dimension suffices.  ``refined_lower`` is the sharper
    combinatorial bound max over l in [k] of min(n - l, l*k + 2l - l^2).
    """

    n: float
    k: float
    feasible: bool
    lower: int | None
    upper: int | None
    refined_lower: int | None

    def to_json_obj(self) -> dict:
        def enc(v):
            if v is None:
                return None
            return "inf" if v == math.inf else int(v)

        return {
            "n": enc(self.n),
            "k": enc(self.k),
            "feasible": self.feasible,
            "lower": enc(self.lower),
            "upper": enc(self.upper),
            "refined_lower": enc(self.refined_lower),
        }


def dimension_bounds(n: int | float, k: int | float) -> DimensionBounds:
    """Bounds on the smallest dimension admitting a MAS embedding.

    Finite ground set, bounded cardinality: lower max(2k, ceil(log2 log3 n)),
    upper min(n, ceil((k+2)^(k+2) ln n)).  Unbounded cardinality over a
    finite ground set needs exactly n.  An infinite ground set admits a MAS
    embedding only in the degenerate single-element case (dimension 2).
    """
    inf_n = n == math.inf
    inf_k = k == math.inf
    if not inf_n and (int(n) != n or n < 1):
        raise ValueError("n must be a positive integer or infinity")
    if not inf_k and (int(k) != k or k < 1):
        raise ValueError("k must be a positive integer or infinity")

    if inf_n:
        if not inf_k and k == 1:
            return DimensionBounds(math.inf, 1, True, 2, 2, 2)
        return DimensionBounds(math.inf, math.inf if inf_k else k, False, None, None, None)

    n = int(n)
    if inf_k:
        return DimensionBounds(n, math.inf, True, n, n, n)

    k = int(k)
    loglog = 0
    if n > 3:
        loglog = math.ceil(math.log2(math.log(n, 3)))
    lower = max(2 * k, loglog, 1)
    upper = n if n == 1 else min(n, math.ceil((k + 2) ** (k + 2) * math.log(n)))
    refined = max(min(n - ell, ell * k + 2 * ell - ell * ell) for ell in range(1, k + 1))
    return DimensionBounds(n, k, True, lower, upper, refined)


class MonotoneExtension:
    """A monotone vector-to-vector map tabulated on the image of an embedding.

    On image points ``M(F(S)) = f(S)``; elsewhere M extends by the largest
    value among dominated image points (elementwise max), which keeps M
    monotone on all of R^m.
    """

    def __init__(self, points: np.ndarray, values: np.ndarray):
        self.points = points  # (M, m)
        self.values = values  # (M, s)

    def eval(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=np.float64)
        mask = np.all(self.points <= v, axis=1)
        if not mask.any():
            raise ValueError("no image point is dominated by the query")
        return np.max(self.values[mask], axis=0)

    def table(self) -> dict[tuple[float, ...], tuple[float, ...]]:
        return {
            tuple(map(float, p)): tuple(map(float, val))
            for p, val in zip(self.points, self.values)
        }


def monotone_extension_demo(
    e: EmbeddingMatrix,
    k: int,
    f_values: Mapping[Multiset, np.ndarray],
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> MonotoneExtension:
    """Factor a monotone multiset function through a MAS embedding.

    Checks that ``e`` is MAS on cardinality <= k and that ``f_values`` is a
    total, monotone table on those multisets; then tabulates
    ``M(F(S)) = f(S)`` and verifies that the max-over-dominated extension
    reproduces f exactly and is monotone across all image points.
    """
    verdict = verify_mas(e, k, cap=cap)
    if not verdict.is_mas:
        raise ValueError(f"embedding is not MAS on cardinality <= {k}: {verdict.violation_kind}")
    multisets = enumerate_multisets(e.n, k, cap=cap)
    missing = [s for s in multisets if s not in f_values]
    if missing:
        raise ValueError(f"f_values missing {len(missing)} multisets, e.g. {missing[0]}")
    values = np.stack([np.atleast_1d(np.asarray(f_values[s], dtype=np.float64)) for s in multisets])
    for i, s in enumerate(multisets):
        for j, t in enumerate(multisets):
            if is_subset(s, t) and not np.all(values[i] <= values[j]):
                raise MonotoneValidationError((s, t))
    points = np.stack([e.evaluate(s) for s in multisets])
    ext = MonotoneExtension(points, values)
    for i, s in enumerate(multisets):
        got = ext.eval(points[i])
        if not np.array_equal(got, values[i]):  # exact: the max is attained at s itself
            raise AssertionError("extension failed to reproduce f on an image point")
    return ext
