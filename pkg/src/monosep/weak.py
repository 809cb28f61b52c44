"""Weakly monotone-and-separating parametric multiset functions.

Over an infinite ground set no single finite-dimensional embedding preserves
containment both ways, so separation is made *parametric*: the family

    F(S; A, b, c)[j] = sum_{x in S} sigma((a_j . x + b_j) / c_j)

with a non-negative activation sigma is monotone for every parameter choice,
and when sigma is a hat (compactly supported) every non-contained pair is
separated by some parameter -- with probability bounded below in terms of the
asymmetric containment distance when (a, b, c) are drawn as

    a ~ Unif(sphere),  b ~ Unif([-1, 1]),  c ~ Unif((0, 2]).

The module also provides the two classical failure modes as executable
counterexamples: single-layer monotone activations (e.g. ReLU) can never
separate a midpoint from its endpoints, and sum-pooled softmax attention is
not even monotone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .activations import ActivationKind, relu, tri_eval
from .multiset import RealMultiset, is_subset_real

__all__ = [
    "WeakMasParams",
    "ReluMasParams",
    "SeparatorResult",
    "sample_params",
    "eval_weak_mas",
    "eval_relu_mas",
    "tri_network_params",
    "find_separator",
    "midpoint_witness",
    "sum_pooled_attention",
    "attention_nonmonotone_demo",
]

_ROW_NORM_TOL = 1e-9


@dataclass(frozen=True)
class WeakMasParams:
    """Parameters (A, b, c, activation) of the hat-sum family.

    Rows of A are unit vectors; b entries lie in [-1, 1]; c entries in
    (0, 2].  The activation is evaluated with support normalized to [0, 1],
    so the composition (a.x + b)/c places the support window [b, b + c] in
    projection space.
    """

    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    activation: ActivationKind

    def __post_init__(self) -> None:
        A = np.asarray(self.A, dtype=np.float64)
        b = np.asarray(self.b, dtype=np.float64)
        c = np.asarray(self.c, dtype=np.float64)
        if A.ndim != 2:
            raise ValueError("A must be (m, d)")
        m = A.shape[0]
        if b.shape != (m,) or c.shape != (m,):
            raise ValueError("b and c must be length-m vectors")
        norms = np.linalg.norm(A, axis=1)
        if np.any(np.abs(norms - 1.0) > _ROW_NORM_TOL):
            raise ValueError("rows of A must be unit vectors")
        if np.any(np.abs(b) > 1.0):
            raise ValueError("b entries must lie in [-1, 1]")
        if np.any(c <= 0.0) or np.any(c > 2.0):
            raise ValueError("c entries must lie in (0, 2]")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def d(self) -> int:
        return self.A.shape[1]

    def to_json_obj(self) -> dict:
        return {
            "A": self.A.tolist(),
            "b": self.b.tolist(),
            "c": self.c.tolist(),
            "activation": self.activation.to_json_obj(),
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "WeakMasParams":
        return cls(
            np.asarray(obj["A"], dtype=np.float64),
            np.asarray(obj["b"], dtype=np.float64),
            np.asarray(obj["c"], dtype=np.float64),
            ActivationKind.from_json_obj(obj["activation"]),
        )


def sample_params(d: int, m: int, seed: int, activation: ActivationKind | None = None) -> WeakMasParams:
    """Draw (A, b, c): rows uniform on the sphere, b on [-1, 1], c on (0, 2]."""
    if d < 1 or m < 1:
        raise ValueError("d and m must be >= 1")
    rng = np.random.default_rng(seed)
    g = rng.standard_normal(size=(m, d))
    A = g / np.linalg.norm(g, axis=1, keepdims=True)
    b = rng.uniform(-1.0, 1.0, size=m)
    c = 2.0 - rng.uniform(0.0, 2.0, size=m)  # uniform on (0, 2]
    act = activation if activation is not None else ActivationKind.tri()
    return WeakMasParams(A, b, c, act)


def eval_weak_mas(p: WeakMasParams, s: RealMultiset) -> np.ndarray:
    """Evaluate the hat-sum family; the empty multiset maps to the zero vector.

    Summation runs over the multiset's canonical (sorted) point order, so the
    result is bit-reproducible and adding a point changes the output by
    exactly the new point's activation vector.
    """
    if s.dim != p.d:
        raise ValueError("dim mismatch")
    out = np.zeros(p.m, dtype=np.float64)
    if s.cardinality() == 0:
        return out
    pts = s.to_array()  # canonical order
    args = (pts @ p.A.T + p.b) / p.c  # (|S|, m)
    vals = p.activation.unit_eval(args)
    for row in vals:  # fixed left-to-right accumulation
        out += row
    return out


@dataclass(frozen=True)
class ReluMasParams:
    """Affine layers of the two-layer-ReLU multiset function.

    F(S) = M2( sum_{x in S} relu(a1 . relu(A2 x + b2) + b1) )
    """

    A2: np.ndarray
    b2: np.ndarray
    a1: np.ndarray
    b1: float

    def __post_init__(self) -> None:
        A2 = np.asarray(self.A2, dtype=np.float64)
        b2 = np.asarray(self.b2, dtype=np.float64)
        a1 = np.asarray(self.a1, dtype=np.float64)
        if A2.ndim != 2 or A2.shape[0] != 3:
            raise ValueError("A2 must be (3, d)")
        if b2.shape != (3,) or a1.shape != (3,):
            raise ValueError("b2 and a1 must be length-3 vectors")
        object.__setattr__(self, "A2", A2)
        object.__setattr__(self, "b2", b2)
        object.__setattr__(self, "a1", a1)

    @property
    def d(self) -> int:
        return self.A2.shape[1]


def tri_network_params(a: np.ndarray | float, b: float) -> ReluMasParams:
    """Explicit parameters realizing sum-of-TRI: the inner network computes
    TRI(a.x + b) through the two-layer ReLU identity
    relu(2t) + relu(2t - 2) - relu(4t - 2) with t = a.x + b."""
    a = np.atleast_1d(np.asarray(a, dtype=np.float64))
    A2 = np.stack([2.0 * a, 2.0 * a, 4.0 * a])
    b2 = np.array([2.0 * b, 2.0 * b - 2.0, 4.0 * b - 2.0])
    a1 = np.array([1.0, 1.0, -1.0])
    return ReluMasParams(A2, b2, a1, 0.0)


def eval_relu_mas(p: ReluMasParams, s: RealMultiset, m2=None) -> float:
    """Evaluate the two-layer ReLU multiset function (scalar output).

    ``m2`` is an optional strictly monotone scalar map applied to the pooled
    sum (identity by default).  With :func:`tri_network_params` this equals
    ``m2(sum_x TRI(a . x + b))``.
    """
    if s.dim != p.d:
        raise ValueError("dim mismatch")
    if s.cardinality() == 0:
        total = 0.0
    else:
        pts = s.to_array()
        hidden = relu(pts @ p.A2.T + p.b2)  # (|S|, 3)
        total = float(np.sum(relu(hidden @ p.a1 + p.b1)))
    return float(m2(total)) if m2 is not None else total


@dataclass(frozen=True)
class SeparatorResult:
    """A separating parameter triple with its margin and the sweep's hit rate."""

    a: np.ndarray
    b: float
    c: float
    margin: float
    hit_rate: float
    draws: int


def find_separator(
    s: RealMultiset,
    t: RealMultiset,
    budget: int,
    seed: int,
    activation: ActivationKind | None = None,
) -> SeparatorResult | None:
    """Monte Carlo search for a scalar parameter triple with F(S) > F(T).

    Requires S not contained in T (separating a contained pair is impossible
    for a monotone family).  Scans ``budget`` i.i.d. triples, returns the
    first separating one together with the empirical hit rate over the whole
    sweep, or None if the budget never separates (which is evidence, not
    proof, of hard separability).
    """
    if s.dim != t.dim:
        raise ValueError("dim mismatch")
    if is_subset_real(s, t, tol=0.0):
        raise ValueError("S is contained in T; no parameter can separate")
    act = activation if activation is not None else ActivationKind.tri()
    rng = np.random.default_rng(seed)
    d = s.dim
    g = rng.standard_normal(size=(budget, d))
    a = g / np.linalg.norm(g, axis=1, keepdims=True)
    b = rng.uniform(-1.0, 1.0, size=budget)
    c = 2.0 - rng.uniform(0.0, 2.0, size=budget)

    def batch_eval(ms: RealMultiset) -> np.ndarray:
        if ms.cardinality() == 0:
            return np.zeros(budget)
        args = (a @ ms.to_array().T + b[:, None]) / c[:, None]  # (budget, |ms|)
        return np.asarray(act.unit_eval(args)).sum(axis=1)

    fs, ft = batch_eval(s), batch_eval(t)
    hits = fs > ft
    n_hits = int(hits.sum())
    if n_hits == 0:
        return None
    first = int(np.argmax(hits))
    return SeparatorResult(
        a=a[first],
        b=float(b[first]),
        c=float(c[first]),
        margin=float(fs[first] - ft[first]),
        hit_rate=n_hits / budget,
        draws=budget,
    )


def midpoint_witness(x: np.ndarray, y: np.ndarray) -> tuple[RealMultiset, RealMultiset]:
    """The pair no single-layer monotone activation can separate.

    S = {(x + y) / 2} is not contained in T = {x, y}, yet for every affine
    map the midpoint's image lies between the endpoints' images, so any
    monotone non-negative activation gives F(S) <= F(T).
    """
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if x.shape != y.shape:
        raise ValueError("dim mismatch")
    if np.array_equal(x, y):
        raise ValueError("x and y must differ")
    mid = 0.5 * (x + y)
    d = x.shape[0]
    return RealMultiset.from_points([mid], dim=d), RealMultiset.from_points([x, y], dim=d)


def sum_pooled_attention(
    points: np.ndarray, w_q: np.ndarray, w_k: np.ndarray, w_v: np.ndarray
) -> np.ndarray:
    """Single-head softmax attention over a point multiset, sum-pooled.

    Queries/keys/values are per-point linear images; each query attends over
    all keys and the attention outputs are summed:
    F(X) = sum_i sum_j softmax_j(q_i . k_j) v_j.
    """
    pts = np.asarray(points, dtype=np.float64)
    q = pts @ w_q.T
    k = pts @ w_k.T
    v = pts @ w_v.T
    logits = q @ k.T
    logits -= logits.max(axis=1, keepdims=True)  # standard stabilization
    w = np.exp(logits)
    w /= w.sum(axis=1, keepdims=True)
    return (w @ v).sum(axis=0)


def attention_nonmonotone_demo(d: int, seed: int) -> dict:
    """Construct S contained in T on which sum-pooled attention decreases.

    With full-rank W_Q = W_K, appending the zero point to a singleton {x1}
    rescales the pooled output of x1's value vector by
    exp(||q1||^2) / (exp(||q1||^2) + 1) + 1/2 > 1, so any negative value
    coordinate strictly decreases even though the multiset only grew.

    Returns the pair, the violated coordinate, both function values there,
    and the closed-form inflation factor.
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    rng = np.random.default_rng(seed)
    while True:
        w = rng.standard_normal(size=(d, d))
        if np.linalg.matrix_rank(w) == d:
            break
    w_q = w_k = w
    while True:
        w_v = rng.standard_normal(size=(d, d))
        if np.any(w_v != 0):
            break
    while True:
        x1 = rng.standard_normal(size=d)
        v1 = w_v @ x1
        if np.any(v1 != 0):
            break
    j = int(np.argmax(np.abs(v1)))
    if v1[j] > 0:
        x1 = -x1
        v1 = -v1

    s_pts = np.array([x1])
    t_pts = np.array([x1, np.zeros(d)])
    f_s = sum_pooled_attention(s_pts, w_q, w_k, w_v)
    f_t = sum_pooled_attention(t_pts, w_q, w_k, w_v)
    q1 = w_q @ x1
    # e^E/(e^E+1) written as a sigmoid so large ||q1|| cannot overflow
    factor = 1.0 / (1.0 + np.exp(-np.dot(q1, q1))) + 0.5
    return {
        "s": RealMultiset.from_points(s_pts),
        "t": RealMultiset.from_points(t_pts),
        "coordinate": j,
        "f_s_j": float(f_s[j]),
        "f_t_j": float(f_t[j]),
        "inflation_factor": float(factor),
        "w_q": w_q,
        "w_v": w_v,
    }
