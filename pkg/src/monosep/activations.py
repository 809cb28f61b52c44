"""Hat activations: compactly supported piecewise-linear bumps.

A hat function is non-negative, compactly supported, continuous and not
identically zero.  The canonical parametric family used here is

    hat(x; alpha, beta, gamma)
        = relu((x - alpha) / (gamma * beta))
        + relu((x - (alpha + beta)) / ((1 - gamma) * beta))
        - relu((x - (alpha + gamma * beta)) / (gamma * (1 - gamma) * beta))

which rises linearly 0 -> 1 on [alpha, alpha + gamma*beta] and falls 1 -> 0 on
[alpha + gamma*beta, alpha + beta].  TRI is the symmetric unit instance
(support [0, 1], peak at 1/2) and is expressible as a two-layer ReLU network:

    TRI(x) = relu(relu(2x) + relu(2x - 2) - relu(4x - 2))

Sums of non-negative activations over a multiset are monotone under
containment for free; the compact support is what makes a single parameter
draw able to *separate* a non-contained pair, which monotone activations like
ReLU cannot do in one layer.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "HatSpec",
    "ActivationKind",
    "hat_eval",
    "hat_grad",
    "tri_eval",
    "relu",
    "tri_relu_identity_check",
    "is_hat",
]


@dataclass(frozen=True)
class HatSpec:
    """Parameters of the piecewise-linear hat: support [alpha, alpha+beta], peak at alpha+gamma*beta."""

    alpha: float
    beta: float
    gamma: float

    def __post_init__(self) -> None:
        if not self.beta > 0:
            raise ValueError("beta must be > 0")
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must lie in (0, 1)")

    @property
    def support(self) -> tuple[float, float]:
        return (self.alpha, self.alpha + self.beta)

    @property
    def peak(self) -> float:
        return self.alpha + self.gamma * self.beta


@dataclass(frozen=True)
class ActivationKind:
    """A pointwise scalar activation: ``hat(spec)``, ``tri`` or ``relu``.

    ``unit_eval`` evaluates the activation normalized to support ``[0, 1]``
    (hats keep their peak fraction gamma; relu is left as-is since it has no
    compact support to normalize).
    """

    name: str
    spec: HatSpec | None = None

    def __post_init__(self) -> None:
        if self.name not in ("hat", "tri", "relu"):
            raise ValueError(f"unknown activation {self.name!r}")
        if self.name == "hat" and self.spec is None:
            raise ValueError("hat activation needs a HatSpec")

    @classmethod
    def hat(cls, spec: HatSpec) -> "ActivationKind":
        return cls("hat", spec)

    @classmethod
    def tri(cls) -> "ActivationKind":
        return cls("tri")

    @classmethod
    def relu(cls) -> "ActivationKind":
        return cls("relu")

    def eval(self, x: np.ndarray | float) -> np.ndarray | float:
        if self.name == "hat":
            return hat_eval(self.spec, x)
        if self.name == "tri":
            return tri_eval(x)
        return relu(x)

    def unit_eval(self, x: np.ndarray | float) -> np.ndarray | float:
        """Evaluate with support rescaled to [0, 1] (identity for relu)."""
        if self.name == "hat":
            return hat_eval(HatSpec(0.0, 1.0, self.spec.gamma), x)
        if self.name == "tri":
            return tri_eval(x)
        return relu(x)

    def to_json_obj(self) -> dict:
        obj: dict = {"name": self.name}
        if self.spec is not None:
            obj["spec"] = [self.spec.alpha, self.spec.beta, self.spec.gamma]
        return obj

    @classmethod
    def from_json_obj(cls, obj: dict) -> "ActivationKind":
        spec = None
        if obj.get("spec") is not None:
            spec = HatSpec(*obj["spec"])
        return cls(obj["name"], spec)


def relu(x):
    return np.maximum(x, 0.0)


def hat_eval(spec: HatSpec, x):
    """Evaluate the three-ReLU hat formula.

    Outside the support the three terms cancel identically; the explicit
    branch returns exact zeros there instead of cancellation dust.
    """
    a, b, g = spec.alpha, spec.beta, spec.gamma
    x = np.asarray(x, dtype=np.float64)
    inside = (x > a) & (x < a + b)
    t1 = relu((x - a) / (g * b))
    t2 = relu((x - (a + b)) / ((1.0 - g) * b))
    t3 = relu((x - (a + g * b)) / (g * (1.0 - g) * b))
    val = np.where(inside, t1 + t2 - t3, 0.0)
    if val.ndim == 0:
        return float(val)
    return val


def hat_grad(spec: HatSpec, x):
    """Partial derivatives (d/dx, d/dalpha, d/dbeta, d/dgamma) of the hat.

    Piecewise-analytic; at the kink points the right-hand derivative is
    returned.  All four partials vanish outside the support.
    """
    a, b, g = spec.alpha, spec.beta, spec.gamma
    x = np.asarray(x, dtype=np.float64)
    rising = (x >= a) & (x < a + g * b)
    falling = (x >= a + g * b) & (x < a + b)

    dx = np.where(rising, 1.0 / (g * b), 0.0) + np.where(falling, -1.0 / ((1.0 - g) * b), 0.0)
    da = np.where(rising, -1.0 / (g * b), 0.0) + np.where(falling, 1.0 / ((1.0 - g) * b), 0.0)
    db = np.where(rising, -(x - a) / (g * b * b), 0.0) + np.where(
        falling, (x - a) / ((1.0 - g) * b * b), 0.0
    )
    dg = np.where(rising, -(x - a) / (g * g * b), 0.0) + np.where(
        falling, (a + b - x) / ((1.0 - g) ** 2 * b), 0.0
    )
    if dx.ndim == 0:
        return float(dx), float(da), float(db), float(dg)
    return dx, da, db, dg


def tri_eval(x):
    """The symmetric unit hat: support [0, 1], peak 1 at 1/2.

    Computed by the direct piecewise formula, which is exact for dyadic
    inputs (the two-layer-ReLU identity then holds with deviation exactly 0).
    """
    x = np.asarray(x, dtype=np.float64)
    val = np.where(
        (x > 0.0) & (x <= 0.5),
        2.0 * x,
        np.where((x > 0.5) & (x < 1.0), 2.0 - 2.0 * x, 0.0),
    )
    if val.ndim == 0:
        return float(val)
    return val


def tri_as_relu_network(x):
    """TRI written as a two-layer ReLU network."""
    x = np.asarray(x, dtype=np.float64)
    val = relu(relu(2.0 * x) + relu(2.0 * x - 2.0) - relu(4.0 * x - 2.0))
    if val.ndim == 0:
        return float(val)
    return val


def tri_relu_identity_check(grid: Sequence[float] | np.ndarray) -> float:
    """Max absolute deviation between TRI and its two-layer ReLU form on a grid.

    Zero (exactly, in float64) on dyadic grids such as ``k / 1024``.
    """
    grid = np.asarray(list(grid), dtype=np.float64)
    if grid.size == 0:
        return 0.0
    return float(np.max(np.abs(tri_eval(grid) - tri_as_relu_network(grid))))


def is_hat(
    xs: np.ndarray,
    ys: np.ndarray,
    support_hint: tuple[float, float],
    lipschitz_bound: float = 100.0,
) -> bool:
    """Grid-level check of the four hat conditions on a sampled function.

    Conditions: non-negative everywhere, zero outside the hinted support, not
    identically zero, and continuous at grid resolution (adjacent-sample
    jumps bounded by ``lipschitz_bound * step``).
    """
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.shape != ys.shape or xs.ndim != 1 or xs.size < 2:
        raise ValueError("need matching 1-D sample arrays with >= 2 points")
    order = np.argsort(xs)
    xs, ys = xs[order], ys[order]
    lo, hi = support_hint
    if np.any(ys < 0):
        return False
    outside = (xs < lo) | (xs > hi)
    if np.any(ys[outside] != 0):
        return False
    if not np.any(ys > 0):
        return False
    steps = np.diff(xs)
    jumps = np.abs(np.diff(ys))
    return bool(np.all(jumps <= lipschitz_bound * steps + 1e-12))
