"""Trainable monotone containment models.

The model embeds a point multiset as

    F(S) = outer( sum_{x in S} sigma( inner(x) ) )

where ``inner`` is a small affine/ReLU stack, ``sigma`` is a non-negative
output activation applied coordinatewise, and ``outer`` is the identity or a
monotone affine map whose weights are used through their absolute values.
Non-negative activations plus a monotone outer map make the model pointwise
monotone *by construction*: appending a point never decreases any output
coordinate, for every parameter value, so exact sub-multisets can never be
misclassified as non-subsets.

Three variants differ only in sigma:

* ``hat_mas``  -- learnable hat bumps per output coordinate.  The raw
  parameters are unconstrained; the support width goes through a shifted ELU
  (or absolute value) to stay positive and the peak fraction through a
  tempered sigmoid to stay in (0, 1).
* ``tri_mas``  -- the fixed symmetric unit hat.
* ``relu_mas`` -- ReLU output; needs at least two inner affine layers to be
  able to carve the compact bumps that separation requires (a single
  monotone layer provably cannot).

All gradients are hand-derived reverse mode; at kinks the right-hand
derivative is used, and the min/max in the hinge loss differentiates through
the achieving index (smallest index on ties).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np

from .multiset import RealMultiset

__all__ = [
    "MasNetModel",
    "hinge_loss",
    "hinge_terms",
    "batch_loss_and_grads",
    "VARIANTS",
]

VARIANTS = ("hat_mas", "tri_mas", "relu_mas")


def _kaiming_uniform(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    bound = np.sqrt(6.0 / fan_in)
    return rng.uniform(-bound, bound, size=(fan_out, fan_in))


class MasNetModel:
    """A monotone multiset-to-vector model with explicit parameter gradients.

    Parameters are plain float64 arrays in ``self.params``:
    ``W{i}/b{i}`` for the inner affine layers, ``alpha0/beta0/gamma0`` for the
    hat variant's raw activation parameters, and ``V/c_out`` for the optional
    monotone outer layer (used through ``|V|``).
    """

    def __init__(
        self,
        d: int,
        m: int,
        variant: str = "hat_mas",
        inner_widths: tuple[int, ...] | None = None,
        outer: str = "identity",
        outer_dim: int | None = None,
        beta_transform: str = "elu",
        upsilon: float = 0.01,
        tau: float = 1.0,
        seed: int = 0,
    ):
        if variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        if outer not in ("identity", "abs_affine"):
            raise ValueError("outer must be 'identity' or 'abs_affine'")
        if beta_transform not in ("elu", "abs"):
            raise ValueError("beta_transform must be 'elu' or 'abs'")
        self.d = int(d)
        self.m = int(m)
        self.variant = variant
        # default inner stack: one hidden ReLU layer of width 4m
        self.inner_widths = tuple(int(w) for w in (inner_widths if inner_widths is not None else (4 * m,)))
        self.outer = outer
        self.outer_dim = int(outer_dim) if outer_dim is not None else self.m
        if outer == "identity":
            self.outer_dim = self.m
        self.beta_transform = beta_transform
        self.upsilon = float(upsilon)
        self.tau = float(tau)

        rng = np.random.default_rng(seed)
        self.params: dict[str, np.ndarray] = {}
        sizes = [self.d, *self.inner_widths, self.m]
        for i in range(len(sizes) - 1):
            fan_in, fan_out = sizes[i], sizes[i + 1]
            self.params[f"W{i}"] = _kaiming_uniform(rng, fan_in, fan_out)
            bb = 1.0 / np.sqrt(fan_in)
            self.params[f"b{i}"] = rng.uniform(-bb, bb, size=fan_out)
        if variant == "hat_mas":
            # hats start covering the pre-activation range with mid peaks
            self.params["alpha0"] = rng.standard_normal(self.m)
            self.params["beta0"] = rng.normal(1.0, 0.1, size=self.m)
            self.params["gamma0"] = np.zeros(self.m)
        if outer == "abs_affine":
            self.params["V"] = _kaiming_uniform(rng, self.m, self.outer_dim)
            self.params["c_out"] = np.zeros(self.outer_dim)

    # ------------------------------------------------------------------ #
    # hat reparameterization

    def hat_specs(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Effective (alpha, beta, gamma) per output coordinate."""
        a0 = self.params["alpha0"]
        b0 = self.params["beta0"]
        g0 = self.params["gamma0"]
        if self.beta_transform == "elu":
            beta = np.where(b0 > 0, b0 + self.upsilon, self.upsilon * np.exp(b0))
        else:
            beta = np.abs(b0)
        gamma = 1.0 / (1.0 + np.exp(-self.tau * g0))
        return a0, beta, gamma

    def _hat_param_chain(self) -> tuple[np.ndarray, np.ndarray]:
        """(dbeta/dbeta0, dgamma/dgamma0); right-hand derivative at beta0 = 0."""
        b0 = self.params["beta0"]
        g0 = self.params["gamma0"]
        if self.beta_transform == "elu":
            dbeta = np.where(b0 >= 0, 1.0, self.upsilon * np.exp(b0))
        else:
            dbeta = np.where(b0 >= 0, 1.0, -1.0)
        s = 1.0 / (1.0 + np.exp(-self.tau * g0))
        dgamma = self.tau * s * (1.0 - s)
        return dbeta, dgamma

    # ------------------------------------------------------------------ #
    # pointwise forward / backward

    def _points_forward(self, x: np.ndarray) -> tuple[np.ndarray, dict]:
        """sigma(inner(x)) for a stack of points x: (N, d) -> (N, m), with cache."""
        cache: dict = {"inputs": [], "pre": []}
        h = x
        n_layers = len(self.inner_widths) + 1
        for i in range(n_layers):
            cache["inputs"].append(h)
            z = h @ self.params[f"W{i}"].T + self.params[f"b{i}"]
            cache["pre"].append(z)
            if i < n_layers - 1:
                h = np.maximum(z, 0.0)
        z = cache["pre"][-1]
        if self.variant == "relu_mas":
            p = np.maximum(z, 0.0)
        elif self.variant == "tri_mas":
            p = _tri_forward(z)
        else:
            alpha, beta, gamma = self.hat_specs()
            p = _hat_forward(z, alpha, beta, gamma)
            cache["hat"] = (alpha, beta, gamma)
        cache["act_out"] = p
        return p, cache

    def _points_backward(self, cache: dict, dp: np.ndarray, grads: dict[str, np.ndarray]) -> None:
        """Accumulate parameter gradients for a pointwise pass; dp: (N, m)."""
        z = cache["pre"][-1]
        if self.variant == "relu_mas":
            dz = dp * (z >= 0)
        elif self.variant == "tri_mas":
            dz = dp * _tri_dx(z)
        else:
            alpha, beta, gamma = cache["hat"]
            dx, da, db, dg = _hat_partials(z, alpha, beta, gamma)
            dz = dp * dx
            dbeta_chain, dgamma_chain = self._hat_param_chain()
            grads["alpha0"] += (dp * da).sum(axis=0)
            grads["beta0"] += (dp * db).sum(axis=0) * dbeta_chain
            grads["gamma0"] += (dp * dg).sum(axis=0) * dgamma_chain

        n_layers = len(self.inner_widths) + 1
        for i in range(n_layers - 1, -1, -1):
            h = cache["inputs"][i]
            grads[f"W{i}"] += dz.T @ h
            grads[f"b{i}"] += dz.sum(axis=0)
            if i > 0:
                dh = dz @ self.params[f"W{i}"]
                dz = dh * (cache["pre"][i - 1] >= 0)

    # ------------------------------------------------------------------ #
    # multiset forward

    def forward(self, s: RealMultiset) -> np.ndarray:
        """Embed one multiset; the empty multiset maps to outer(0)."""
        if s.dim != self.d:
            raise ValueError("dim mismatch")
        if s.cardinality() == 0:
            u = np.zeros(self.m)
        else:
            p, _ = self._points_forward(s.to_array())
            u = np.zeros(self.m)
            for row in p:  # canonical-order accumulation, bit-reproducible
                u += row
        return self._outer(u[None, :])[0]

    def forward_batch(self, x: np.ndarray) -> np.ndarray:
        """Embed a batch of same-cardinality multisets; x: (B, p, d)."""
        bsz, p, _ = x.shape
        pv, _ = self._points_forward(x.reshape(bsz * p, self.d))
        u = pv.reshape(bsz, p, self.m).sum(axis=1)
        return self._outer(u)

    def _outer(self, u: np.ndarray) -> np.ndarray:
        if self.outer == "identity":
            return u
        return u @ np.abs(self.params["V"]).T + self.params["c_out"]

    def vjp_batch(self, x: np.ndarray, g: np.ndarray, grads: dict[str, np.ndarray]) -> None:
        """Accumulate d(g . F)/dparams for a batch; x: (B, p, d), g: (B, out)."""
        bsz, p, _ = x.shape
        pv, cache = self._points_forward(x.reshape(bsz * p, self.d))
        u = pv.reshape(bsz, p, self.m).sum(axis=1)
        if self.outer == "identity":
            du = g
        else:
            absv = np.abs(self.params["V"])
            du = g @ absv
            grads["V"] += (g.T @ u) * np.sign(self.params["V"])
            grads["c_out"] += g.sum(axis=0)
        dp = np.repeat(du, p, axis=0)
        self._points_backward(cache, dp, grads)

    # ------------------------------------------------------------------ #
    # parameter plumbing

    def zero_grads(self) -> dict[str, np.ndarray]:
        return {k: np.zeros_like(v) for k, v in self.params.items()}

    def state_copy(self) -> dict[str, np.ndarray]:
        return {k: v.copy() for k, v in self.params.items()}

    def load_state(self, state: dict[str, np.ndarray]) -> None:
        for k in self.params:
            self.params[k] = state[k].copy()

    def clone(self) -> "MasNetModel":
        other = MasNetModel(
            self.d,
            self.m,
            self.variant,
            self.inner_widths,
            self.outer,
            self.outer_dim,
            self.beta_transform,
            self.upsilon,
            self.tau,
        )
        other.load_state(self.params)
        return other

    def to_checkpoint_json(self) -> str:
        obj = {
            "format": "masnet-checkpoint-v1",
            "variant": self.variant,
            "d": self.d,
            "m": self.m,
            "inner_widths": list(self.inner_widths),
            "outer": self.outer,
            "outer_dim": self.outer_dim,
            "beta_transform": self.beta_transform,
            "upsilon": self.upsilon,
            "tau": self.tau,
            "weights": {
                k: {"shape": list(v.shape), "data": v.reshape(-1).tolist()}
                for k, v in sorted(self.params.items())
            },
        }
        return json.dumps(obj, sort_keys=True)

    @classmethod
    def from_checkpoint_json(cls, text: str) -> "MasNetModel":
        obj = json.loads(text)
        if obj.get("format") != "masnet-checkpoint-v1":
            raise ValueError("not a model checkpoint")
        model = cls(
            obj["d"],
            obj["m"],
            obj["variant"],
            tuple(obj["inner_widths"]),
            obj["outer"],
            obj["outer_dim"],
            obj["beta_transform"],
            obj["upsilon"],
            obj["tau"],
        )
        for k, meta in obj["weights"].items():
            model.params[k] = np.asarray(meta["data"], dtype=np.float64).reshape(meta["shape"])
        return model

    def checkpoint_hash(self) -> str:
        return hashlib.sha256(self.to_checkpoint_json().encode()).hexdigest()


# ---------------------------------------------------------------------- #
# activations on pre-activation arrays (right-hand derivative at kinks)


def _tri_forward(z: np.ndarray) -> np.ndarray:
    return np.where(
        (z > 0.0) & (z <= 0.5), 2.0 * z, np.where((z > 0.5) & (z < 1.0), 2.0 - 2.0 * z, 0.0)
    )


def _tri_dx(z: np.ndarray) -> np.ndarray:
    return np.where((z >= 0.0) & (z < 0.5), 2.0, np.where((z >= 0.5) & (z < 1.0), -2.0, 0.0))


def _hat_forward(z: np.ndarray, alpha: np.ndarray, beta: np.ndarray, gamma: np.ndarray) -> np.ndarray:
    rising = (z > alpha) & (z <= alpha + gamma * beta)
    falling = (z > alpha + gamma * beta) & (z < alpha + beta)
    up = (z - alpha) / (gamma * beta)
    down = (alpha + beta - z) / ((1.0 - gamma) * beta)
    return np.where(rising, up, np.where(falling, down, 0.0))


def _hat_partials(z, alpha, beta, gamma):
    rising = (z >= alpha) & (z < alpha + gamma * beta)
    falling = (z >= alpha + gamma * beta) & (z < alpha + beta)
    gb = gamma * beta
    ob = (1.0 - gamma) * beta
    dx = np.where(rising, 1.0 / gb, 0.0) + np.where(falling, -1.0 / ob, 0.0)
    da = np.where(rising, -1.0 / gb, 0.0) + np.where(falling, 1.0 / ob, 0.0)
    db = np.where(rising, -(z - alpha) / (gb * beta), 0.0) + np.where(
        falling, (z - alpha) / (ob * beta), 0.0
    )
    dg = np.where(rising, -(z - alpha) / (gamma * gb), 0.0) + np.where(
        falling, (alpha + beta - z) / ((1.0 - gamma) * ob), 0.0
    )
    return dx, da, db, dg


# ---------------------------------------------------------------------- #
# hinge loss


def hinge_terms(
    f_s: np.ndarray, f_t: np.ndarray, y: int, delta: float, negative_term: str = "separating"
) -> tuple[float, np.ndarray]:
    """Loss value and its gradient with respect to D = F(S) - F(T).

    y = 1 penalizes ``max_i [D_i + delta]_+``: a contained pair must be
    dominated in every coordinate with margin delta.

    y = 0 with ``negative_term="separating"`` penalizes
    ``min_i [-D_i + delta]_+``: a non-contained pair must exceed in some
    coordinate with margin delta.  ``negative_term="display"`` instead
    penalizes ``min_i [D_i + delta]_+``, which is the published form of the
    objective; note it rewards anti-dominance (some coordinate far *below*)
    rather than demanding a separating coordinate, and on its own it exerts
    no upward pressure on any coordinate of a negative pair.
    """
    d_vec = f_s - f_t
    grad = np.zeros_like(d_vec)
    if y == 1:
        bracket = d_vec + delta
        idx = int(np.argmax(bracket))
        val = max(bracket[idx], 0.0)
        if bracket[idx] >= 0.0:
            grad[idx] = 1.0
        return float(val), grad
    if negative_term == "display":
        bracket = d_vec + delta
        idx = int(np.argmin(bracket))
        val = max(bracket[idx], 0.0)
        if bracket[idx] >= 0.0:
            grad[idx] = 1.0
        return float(val), grad
    if negative_term != "separating":
        raise ValueError("negative_term must be 'separating' or 'display'")
    bracket = -d_vec + delta
    idx = int(np.argmin(bracket))
    val = max(bracket[idx], 0.0)
    if bracket[idx] >= 0.0:
        grad[idx] = -1.0
    return float(val), grad


def hinge_loss(model: MasNetModel, pair, delta: float) -> float:
    """The fixed-margin dominance hinge for one labeled pair (published form).

    ``(1-y) min_i [F(S)_i - F(T)_i + delta]_+  +  y max_i [F(S)_i - F(T)_i + delta]_+``
    """
    f_s = model.forward(pair.s)
    f_t = model.forward(pair.t)
    val, _ = hinge_terms(f_s, f_t, pair.y, delta, negative_term="display")
    return val


def batch_loss_and_grads(
    model: MasNetModel,
    xs: np.ndarray,
    xt: np.ndarray,
    ys: np.ndarray,
    delta: float,
    negative_term: str = "separating",
) -> tuple[float, dict[str, np.ndarray]]:
    """Summed hinge loss and parameter gradients over a stacked batch.

    ``xs``: (B, |S|, d), ``xt``: (B, |T|, d), ``ys``: (B,) in {0, 1}.
    Sum reduction: duplicating a pair doubles its gradient contribution.
    """
    f_s = model.forward_batch(xs)
    f_t = model.forward_batch(xt)
    g = np.zeros_like(f_s)
    total = 0.0
    for i in range(len(ys)):
        val, grad = hinge_terms(f_s[i], f_t[i], int(ys[i]), delta, negative_term)
        total += val
        g[i] = grad
    grads = model.zero_grads()
    model.vjp_batch(xs, g, grads)
    model.vjp_batch(xt, -g, grads)
    return total, grads
