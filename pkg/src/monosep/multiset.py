"""Canonical multiset representations shared by every other module.

Two flavours of multiset are used throughout:

* :class:`Multiset` -- element counts over a finite ground set ``{0, ..., n-1}``,
  the object of the exact embedding constructions.
* :class:`RealMultiset` -- a finite collection of points in ``R^d`` with
  multiplicity, the object of the parametric / trainable constructions.

Both are immutable value objects: hashable, comparable, safe to share.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

__all__ = [
    "Multiset",
    "RealMultiset",
    "GroundSpec",
    "GroundMismatchError",
    "EnumerationCapError",
    "is_subset",
    "is_subset_real",
    "enumerate_multisets",
]

#: Default ceiling on the number of multisets an enumeration may produce.
DEFAULT_ENUMERATION_CAP = 2_000_000


class GroundMismatchError(ValueError):
    """Two multisets drawn from incompatible ground sets were combined."""


class EnumerationCapError(ValueError):
    """A requested enumeration would exceed the configured size cap."""


@dataclass(frozen=True)
class Multiset:
    """A multiset over the finite ground set ``{0, ..., ground_size - 1}``.

    ``items`` is a sorted tuple of ``(element, multiplicity)`` pairs with
    strictly positive multiplicities; absent elements have multiplicity 0.
    """

    items: tuple[tuple[int, int], ...]
    ground_size: int

    def __post_init__(self) -> None:
        if self.ground_size < 1:
            raise ValueError("ground_size must be >= 1")
        prev = -1
        for elem, mult in self.items:
            if not (0 <= elem < self.ground_size):
                raise ValueError(f"element {elem} outside ground set [0, {self.ground_size})")
            if mult < 1:
                raise ValueError(f"multiplicity of element {elem} must be >= 1, got {mult}")
            if elem <= prev:
                raise ValueError("items must be sorted by element with no duplicates")
            prev = elem

    @classmethod
    def from_counts(cls, counts: Mapping[int, int], ground_size: int) -> "Multiset":
        items = tuple(sorted((int(e), int(c)) for e, c in counts.items() if c != 0))
        return cls(items, ground_size)

    @classmethod
    def from_elements(cls, elements: Iterable[int], ground_size: int) -> "Multiset":
        counts: dict[int, int] = {}
        for e in elements:
            counts[int(e)] = counts.get(int(e), 0) + 1
        return cls.from_counts(counts, ground_size)

    @classmethod
    def empty(cls, ground_size: int) -> "Multiset":
        return cls((), ground_size)

    def count(self, element: int) -> int:
        for e, c in self.items:
            if e == element:
                return c
        return 0

    def cardinality(self) -> int:
        return sum(c for _, c in self.items)

    def support(self) -> tuple[int, ...]:
        return tuple(e for e, _ in self.items)

    def count_vector(self) -> np.ndarray:
        """Counts as a dense integer vector of length ``ground_size``."""
        vec = np.zeros(self.ground_size, dtype=np.int64)
        for e, c in self.items:
            vec[e] = c
        return vec

    def add(self, element: int, multiplicity: int = 1) -> "Multiset":
        counts = dict(self.items)
        counts[element] = counts.get(element, 0) + multiplicity
        return Multiset.from_counts(counts, self.ground_size)

    def union(self, other: "Multiset") -> "Multiset":
        """Multiset sum: multiplicities add."""
        if self.ground_size != other.ground_size:
            raise GroundMismatchError("ground mismatch")
        counts = dict(self.items)
        for e, c in other.items:
            counts[e] = counts.get(e, 0) + c
        return Multiset.from_counts(counts, self.ground_size)

    def to_json(self) -> str:
        return json.dumps({"n": self.ground_size, "counts": [list(p) for p in self.items]})

    @classmethod
    def from_json(cls, text: str) -> "Multiset":
        obj = json.loads(text)
        return cls.from_counts({int(e): int(c) for e, c in obj["counts"]}, int(obj["n"]))

    def __repr__(self) -> str:
        inner = ", ".join(f"{e}:{c}" for e, c in self.items)
        return f"Multiset({{{inner}}}, n={self.ground_size})"


@dataclass(frozen=True)
class RealMultiset:
    """A multiset of points in ``R^d``.

    Points are stored in canonical (lexicographically sorted) order so that
    equality, hashing and summation order are all reproducible.  Two real
    multisets are equal iff their sorted point lists are equal bit for bit.
    """

    points: tuple[tuple[float, ...], ...]
    dim: int

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        for p in self.points:
            if len(p) != self.dim:
                raise ValueError(f"point of length {len(p)} in multiset of dim {self.dim}")
        object.__setattr__(self, "points", tuple(sorted(self.points)))

    @classmethod
    def from_points(cls, points: Sequence[Sequence[float]] | np.ndarray, dim: int | None = None) -> "RealMultiset":
        arr = np.asarray(points, dtype=np.float64)
        if arr.size == 0:
            if dim is None:
                raise ValueError("dim required for an empty multiset")
            return cls((), dim)
        if arr.ndim != 2:
            raise ValueError("points must be a 2-D array-like")
        if dim is not None and arr.shape[1] != dim:
            raise ValueError(f"points have dim {arr.shape[1]}, expected {dim}")
        pts = tuple(tuple(float(v) for v in row) for row in arr)
        return cls(pts, arr.shape[1])

    @classmethod
    def empty(cls, dim: int) -> "RealMultiset":
        return cls((), dim)

    def cardinality(self) -> int:
        return len(self.points)

    def to_array(self) -> np.ndarray:
        """Points as a ``(cardinality, dim)`` float64 array in canonical order."""
        if not self.points:
            return np.zeros((0, self.dim), dtype=np.float64)
        return np.array(self.points, dtype=np.float64)

    def add(self, point: Sequence[float]) -> "RealMultiset":
        p = tuple(float(v) for v in point)
        if len(p) != self.dim:
            raise ValueError("dim mismatch")
        return RealMultiset(self.points + (p,), self.dim)

    def union(self, other: "RealMultiset") -> "RealMultiset":
        if self.dim != other.dim:
            raise ValueError("dim mismatch")
        return RealMultiset(self.points + other.points, self.dim)

    def to_json(self) -> str:
        return json.dumps({"d": self.dim, "points": [list(p) for p in self.points]})

    @classmethod
    def from_json(cls, text: str) -> "RealMultiset":
        obj = json.loads(text)
        return cls.from_points(obj["points"], dim=int(obj["d"]))

    def __repr__(self) -> str:
        return f"RealMultiset({len(self.points)} points, d={self.dim})"


@dataclass(frozen=True)
class GroundSpec:
    """Description of a ground set: finite ``[n]``, a cube, or a unit sphere.

    ``kind`` is one of ``"finite"``, ``"cube"``, ``"sphere"``.
    """

    kind: str
    n: int | None = None
    dim: int | None = None
    bound: float | None = None

    def __post_init__(self) -> None:
        if self.kind == "finite":
            if self.n is None or self.n < 1:
                raise ValueError("finite ground set needs n >= 1")
        elif self.kind == "cube":
            if self.dim is None or self.dim < 1:
                raise ValueError("cube ground set needs dim >= 1")
            if self.bound is None or self.bound <= 0:
                raise ValueError("cube ground set needs bound > 0")
        elif self.kind == "sphere":
            if self.dim is None or self.dim < 2:
                raise ValueError("sphere ground set needs dim >= 2")
        else:
            raise ValueError(f"unknown ground kind {self.kind!r}")

    @classmethod
    def finite(cls, n: int) -> "GroundSpec":
        return cls("finite", n=n)

    @classmethod
    def cube(cls, dim: int, bound: float = 1.0) -> "GroundSpec":
        return cls("cube", dim=dim, bound=float(bound))

    @classmethod
    def sphere(cls, dim: int) -> "GroundSpec":
        return cls("sphere", dim=dim)

    def sample_points(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """Draw ``count`` i.i.d. uniform points from the ground set."""
        if self.kind == "cube":
            return rng.uniform(-self.bound, self.bound, size=(count, self.dim))
        if self.kind == "sphere":
            g = rng.standard_normal(size=(count, self.dim))
            return g / np.linalg.norm(g, axis=1, keepdims=True)
        raise ValueError("point sampling is only defined for continuous grounds")

    def project(self, points: np.ndarray) -> np.ndarray:
        """Map arbitrary points back onto the ground set (clip / renormalize)."""
        if self.kind == "cube":
            return np.clip(points, -self.bound, self.bound)
        if self.kind == "sphere":
            return points / np.linalg.norm(points, axis=-1, keepdims=True)
        raise ValueError("projection is only defined for continuous grounds")


def is_subset(s: Multiset, t: Multiset) -> bool:
    """Containment in the multiplicity order: ``c_s(v) <= c_t(v)`` for all v."""
    if s.ground_size != t.ground_size:
        raise GroundMismatchError("ground mismatch")
    t_counts = dict(t.items)
    return all(c <= t_counts.get(e, 0) for e, c in s.items)


def is_subset_real(s: RealMultiset, t: RealMultiset, tol: float = 0.0) -> bool:
    """Containment for point multisets, up to a per-point Euclidean tolerance.

    True iff every point of ``s`` can be matched injectively to a point of
    ``t`` at distance <= ``tol``.  The default ``tol = 0`` is bit-exact
    containment.  Feasibility is decided by solving a 0/1 assignment over the
    thresholded distance matrix, which is exact (min-total-cost on a 0/1
    matrix is 0 iff a feasible matching exists).
    """
    if s.dim != t.dim:
        raise ValueError("dim mismatch")
    if tol < 0:
        raise ValueError("tol must be >= 0")
    ns, nt = s.cardinality(), t.cardinality()
    if ns == 0:
        return True
    if ns > nt:
        return False
    from .distance import assignment_solve  # local import: distance depends on this module

    diff = s.to_array()[:, None, :] - t.to_array()[None, :, :]
    dist = np.linalg.norm(diff, axis=2)
    feasible = (dist <= tol).astype(np.float64)
    coupling = assignment_solve(1.0 - feasible)
    return coupling.total_cost == 0.0


def _count_multisets(n: int, k: int) -> int:
    # sum_{j<=k} C(n+j-1, j) telescopes to C(n+k, k)
    return math.comb(n + k, k)


def enumerate_multisets(n: int, k: int, cap: int = DEFAULT_ENUMERATION_CAP) -> list[Multiset]:
    """All multisets over ``[n]`` of cardinality <= ``k``.

    Ordered by cardinality, then lexicographically on the sorted element
    tuple; the order is deterministic and duplicate-free.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if k < 0:
        raise ValueError("k must be >= 0")
    total = _count_multisets(n, k)
    if total > cap:
        raise EnumerationCapError(
            f"enumeration too large: {total} multisets over cap {cap}"
        )
    out: list[Multiset] = []
    for j in range(k + 1):
        for combo in itertools.combinations_with_replacement(range(n), j):
            out.append(Multiset.from_elements(combo, n))
    return out
