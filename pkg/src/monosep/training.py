"""Synthetic containment data, training loops and evaluation.

The synthetic task: a target multiset T of i.i.d. standard Gaussian points;
positive queries S are uniform sub-multisets of T (without replacement),
negative queries are fresh Gaussian draws, and optional Gaussian noise is
added to the query points afterwards without changing the label.  Pairs are
split 5:2:2 into train/dev/test by a deterministic hash of the pair index, so
the split never depends on how many pairs were generated or on library
version.

Training minimizes the fixed-margin dominance hinge with plain SGD or Adam,
deterministically given the seed.  Evaluation predicts "contained" exactly
when the query embedding is dominated coordinatewise (up to ``delta_eval``),
so with noiseless data false negatives are structurally impossible.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .masnet import MasNetModel, batch_loss_and_grads, hinge_terms
from .multiset import RealMultiset

__all__ = [
    "ContainmentPair",
    "TrainConfig",
    "TrainingDivergedError",
    "EvalResult",
    "generate_synthetic",
    "split_synthetic",
    "save_pairs_jsonl",
    "load_pairs_jsonl",
    "train",
    "evaluate_containment",
    "fit_monotone_function",
    "monotone_target",
    "generate_value_sets",
]


@dataclass(frozen=True)
class ContainmentPair:
    """A labeled (query, target) pair; y = 1 means S was drawn inside T."""

    s: RealMultiset
    t: RealMultiset
    y: int
    noise_std: float = 0.0

    def to_json_obj(self) -> dict:
        return {
            "s": [list(p) for p in self.s.points],
            "t": [list(p) for p in self.t.points],
            "y": self.y,
            "noise_std": self.noise_std,
            "d": self.s.dim,
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "ContainmentPair":
        d = int(obj["d"])
        return cls(
            RealMultiset.from_points(obj["s"], dim=d),
            RealMultiset.from_points(obj["t"], dim=d),
            int(obj["y"]),
            float(obj.get("noise_std", 0.0)),
        )


class TrainingDivergedError(RuntimeError):
    def __init__(self, epoch: int):
        self.epoch = epoch
        super().__init__(f"training diverged (non-finite loss) at epoch {epoch}")


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters of the hinge training loop."""

    margin: float = 0.1
    lr: float = 1e-3
    epochs: int = 20
    batch_size: int = 32
    optimizer: str = "adam"
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0
    m: int = 256
    variant: str = "hat_mas"
    patience: int | None = None
    negative_term: str = "separating"
    monotonicity_probes: int = 4

    def __post_init__(self) -> None:
        if self.margin <= 0:
            raise ValueError("margin must be > 0")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError("optimizer must be 'adam' or 'sgd'")
        if self.variant not in ("hat_mas", "tri_mas", "relu_mas"):
            raise ValueError("unknown variant")


def generate_synthetic(
    num_pairs: int,
    size_s: int,
    size_t: int,
    d: int,
    noise_std: float = 0.0,
    pos_ratio: float = 0.5,
    seed: int = 0,
) -> list[ContainmentPair]:
    """Labeled pairs for the synthetic containment task (see module docstring)."""
    if size_s > size_t:
        raise ValueError("|S| must be <= |T|")
    if not 0.0 <= pos_ratio <= 1.0:
        raise ValueError("pos_ratio must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    pairs = []
    for _ in range(num_pairs):
        t_pts = rng.standard_normal(size=(size_t, d))
        positive = rng.uniform() < pos_ratio
        if positive:
            idx = rng.choice(size_t, size=size_s, replace=False)
            s_pts = t_pts[idx].copy()
        else:
            s_pts = rng.standard_normal(size=(size_s, d))
        if noise_std > 0:
            s_pts = s_pts + rng.normal(0.0, noise_std, size=s_pts.shape)
        pairs.append(
            ContainmentPair(
                RealMultiset.from_points(s_pts),
                RealMultiset.from_points(t_pts),
                int(positive),
                noise_std,
            )
        )
    return pairs


def _split_bucket(index: int) -> int:
    h = hashlib.sha256(str(index).encode()).digest()
    return int.from_bytes(h[:8], "little") % 9


def split_synthetic(
    pairs: list[ContainmentPair],
) -> tuple[list[ContainmentPair], list[ContainmentPair], list[ContainmentPair]]:
    """Deterministic 5:2:2 train/dev/test split by hash of pair index."""
    train, dev, test = [], [], []
    for i, pair in enumerate(pairs):
        b = _split_bucket(i)
        (train if b < 5 else dev if b < 7 else test).append(pair)
    return train, dev, test


def save_pairs_jsonl(pairs: list[ContainmentPair], path: str) -> None:
    with open(path, "w") as fh:
        for p in pairs:
            fh.write(json.dumps(p.to_json_obj()) + "\n")


def load_pairs_jsonl(path: str) -> list[ContainmentPair]:
    out = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(ContainmentPair.from_json_obj(json.loads(line)))
    return out


def _stack(pairs: list[ContainmentPair]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    xs = np.stack([p.s.to_array() for p in pairs])
    xt = np.stack([p.t.to_array() for p in pairs])
    ys = np.array([p.y for p in pairs])
    return xs, xt, ys


class _Adam:
    def __init__(self, params: dict[str, np.ndarray], lr: float, b1: float, b2: float, eps: float):
        self.lr, self.b1, self.b2, self.eps = lr, b1, b2, eps
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        for k in params:
            g = grads[k]
            self.m[k] = self.b1 * self.m[k] + (1 - self.b1) * g
            self.v[k] = self.b2 * self.v[k] + (1 - self.b2) * g * g
            mhat = self.m[k] / (1 - self.b1**self.t)
            vhat = self.v[k] / (1 - self.b2**self.t)
            params[k] -= self.lr * mhat / (np.sqrt(vhat) + self.eps)


class _SGD:
    def __init__(self, lr: float):
        self.lr = lr

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        for k in params:
            params[k] -= self.lr * grads[k]


def _make_optimizer(cfg: TrainConfig, params: dict[str, np.ndarray]):
    if cfg.optimizer == "adam":
        return _Adam(params, cfg.lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps)
    return _SGD(cfg.lr)


def _dataset_loss(model: MasNetModel, pairs: list[ContainmentPair], cfg: TrainConfig) -> float:
    if not pairs:
        return 0.0
    xs, xt, ys = _stack(pairs)
    f_s = model.forward_batch(xs)
    f_t = model.forward_batch(xt)
    total = 0.0
    for i in range(len(ys)):
        val, _ = hinge_terms(f_s[i], f_t[i], int(ys[i]), cfg.margin, cfg.negative_term)
        total += val
    return total / len(ys)


def _probe_monotonicity(model: MasNetModel, pairs: list[ContainmentPair], rng: np.random.Generator, count: int) -> None:
    """Spot-check structural monotonicity on exact sub-multisets of training targets."""
    if count <= 0 or not pairs:
        return
    for _ in range(count):
        pair = pairs[int(rng.integers(len(pairs)))]
        t_pts = pair.t.to_array()
        size = int(rng.integers(1, len(t_pts) + 1))
        idx = rng.choice(len(t_pts), size=size, replace=False)
        f_sub = model.forward(RealMultiset.from_points(t_pts[idx]))
        f_t = model.forward(pair.t)
        if not np.all(f_sub <= f_t + 1e-9):
            raise RuntimeError("structural monotonicity violated; model construction is broken")


def train(
    model: MasNetModel,
    pairs: list[ContainmentPair],
    cfg: TrainConfig,
) -> tuple[MasNetModel, dict[str, list[float]]]:
    """Seeded mini-batch hinge training with dev-accuracy early stopping.

    Splits ``pairs`` 5:2:2; trains on the train fold and monitors the dev
    fold.  With ``patience`` set, stops once dev accuracy has not improved
    for that many epochs and restores the best parameters.  Deterministic
    given the seed; raises :class:`TrainingDivergedError` on non-finite loss.
    """
    train_pairs, dev_pairs, _ = split_synthetic(pairs)
    if not train_pairs:
        raise ValueError("no training pairs after the split")
    history: dict[str, list[float]] = {"train_loss": [], "dev_loss": [], "dev_accuracy": []}
    if cfg.epochs == 0:
        return model, history
    optimizer = _make_optimizer(cfg, model.params)
    rng = np.random.default_rng(cfg.seed)
    best_acc = -1.0
    best_state = model.state_copy()
    since_best = 0
    for epoch in range(cfg.epochs):
        order = rng.permutation(len(train_pairs))
        epoch_loss = 0.0
        for start in range(0, len(order), cfg.batch_size):
            batch = [train_pairs[i] for i in order[start : start + cfg.batch_size]]
            xs, xt, ys = _stack(batch)
            loss, grads = batch_loss_and_grads(model, xs, xt, ys, cfg.margin, cfg.negative_term)
            if not np.isfinite(loss):
                raise TrainingDivergedError(epoch)
            epoch_loss += loss
            optimizer.step(model.params, grads)
        history["train_loss"].append(epoch_loss / len(train_pairs))
        dev_loss = _dataset_loss(model, dev_pairs, cfg)
        dev_acc = (
            evaluate_containment(model, dev_pairs, delta_eval=0.0).accuracy if dev_pairs else float("nan")
        )
        history["dev_loss"].append(dev_loss)
        history["dev_accuracy"].append(dev_acc)
        _probe_monotonicity(model, train_pairs, rng, cfg.monotonicity_probes)
        if dev_pairs and dev_acc > best_acc:
            best_acc = dev_acc
            best_state = model.state_copy()
            since_best = 0
        else:
            since_best += 1
        if cfg.patience is not None and since_best > cfg.patience:
            break
    if dev_pairs and best_acc >= 0:
        model.load_state(best_state)
    return model, history


@dataclass(frozen=True)
class EvalResult:
    accuracy: float
    tp: int
    fp: int
    tn: int
    fn: int

    def to_json_obj(self) -> dict:
        return {"accuracy": self.accuracy, "tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn}


def evaluate_containment(
    model: MasNetModel, pairs: list[ContainmentPair], delta_eval: float = 0.0
) -> EvalResult:
    """Dominance-rule classification: predict contained iff F(S) <= F(T) + delta_eval."""
    if not pairs:
        raise ValueError("no data")
    sizes = {(p.s.cardinality(), p.t.cardinality()) for p in pairs}
    tp = fp = tn = fn = 0
    if len(sizes) == 1:
        xs, xt, ys = _stack(pairs)
        pred = np.all(model.forward_batch(xs) <= model.forward_batch(xt) + delta_eval, axis=1)
    else:
        pred = np.array(
            [bool(np.all(model.forward(p.s) <= model.forward(p.t) + delta_eval)) for p in pairs]
        )
        ys = np.array([p.y for p in pairs])
    tp = int(np.sum(pred & (ys == 1)))
    fp = int(np.sum(pred & (ys == 0)))
    tn = int(np.sum(~pred & (ys == 0)))
    fn = int(np.sum(~pred & (ys == 1)))
    return EvalResult((tp + tn) / len(pairs), tp, fp, tn, fn)


# ---------------------------------------------------------------------- #
# monotone function regression


def monotone_target(kind: str, d: int, seed: int = 0, components: int = 8):
    """Built-in monotone multiset-to-scalar targets for regression tests.

    ``cardinality``: F*(S) = |S|.  ``constant``: F*(S) = 1.  ``coverage``:
    a sum over random directions of the best hat response any point of S
    achieves (a coverage-style objective).  ``max_projection``: a sum over
    random directions of the largest thresholded projection.
    All are monotone: adding points can only raise the value.
    """
    rng = np.random.default_rng(seed)
    a = rng.standard_normal(size=(components, d))
    a /= np.linalg.norm(a, axis=1, keepdims=True)
    b = rng.uniform(-1.0, 1.0, size=components)

    if kind == "cardinality":
        return lambda s: float(s.cardinality())
    if kind == "constant":
        return lambda s: 1.0
    if kind == "coverage":
        from .activations import tri_eval

        def coverage(s: RealMultiset) -> float:
            if s.cardinality() == 0:
                return 0.0
            args = s.to_array() @ a.T + b  # (|S|, components)
            return float(np.asarray(tri_eval(args)).max(axis=0).sum())

        return coverage
    if kind == "max_projection":

        def maxproj(s: RealMultiset) -> float:
            if s.cardinality() == 0:
                return 0.0
            args = np.maximum(s.to_array() @ a.T + b, 0.0)
            return float(args.max(axis=0).sum())

        return maxproj
    raise ValueError(f"unknown target kind {kind!r}")


def generate_value_sets(
    num_sets: int, max_size: int, d: int, target, seed: int = 0
) -> list[tuple[RealMultiset, float]]:
    """Random Gaussian multisets of size 1..max_size with target values."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(num_sets):
        size = int(rng.integers(1, max_size + 1))
        s = RealMultiset.from_points(rng.standard_normal(size=(size, d)))
        out.append((s, float(target(s))))
    return out


def fit_monotone_function(
    model: MasNetModel,
    dataset: list[tuple[RealMultiset, float]],
    cfg: TrainConfig,
) -> tuple[MasNetModel, float]:
    """MSE-train a scalar-output model on (multiset, value) pairs; report MAE.

    The dataset is split 5:2:2 like the containment task; the returned MAE
    is measured on the held-out test fold.
    """
    if model.outer_dim != 1:
        raise ValueError("monotone regression needs a scalar-output model")
    buckets = [_split_bucket(i) for i in range(len(dataset))]
    train_set = [x for x, b in zip(dataset, buckets) if b < 5]
    test_set = [x for x, b in zip(dataset, buckets) if b >= 7]
    if not train_set or not test_set:
        raise ValueError("dataset too small to split")
    optimizer = _make_optimizer(cfg, model.params)
    rng = np.random.default_rng(cfg.seed)
    for epoch in range(cfg.epochs):
        order = rng.permutation(len(train_set))
        for start in range(0, len(order), cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            grads = model.zero_grads()
            loss = 0.0
            for i in idx:
                s, val = train_set[i]
                # per-set backward: sizes vary, so no stacking
                pts = s.to_array()[None, :, :] if s.cardinality() else np.zeros((1, 0, model.d))
                f = model.forward_batch(pts)[0]
                err = float(f[0] - val)
                loss += err * err
                model.vjp_batch(pts, np.array([[2.0 * err]]), grads)
            if not np.isfinite(loss):
                raise TrainingDivergedError(epoch)
            optimizer.step(model.params, grads)
    abs_errs = [abs(float(model.forward(s)[0]) - val) for s, val in test_set]
    return model, float(np.mean(abs_errs))
