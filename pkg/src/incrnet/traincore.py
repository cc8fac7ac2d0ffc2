"""Mini-batch training that honours freeze flags, with patience stopping."""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import numerics
from .netgraph import InputRef, NetworkGraph, gather_all, output_logit

CRITERIA = ("train_loss", "validation_accuracy")
OPTIMIZERS = ("adam", "sgd")


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.001
    batch_size: int = 1024
    max_epochs: int = 100
    patience: int = 10
    threshold: float = 0.01
    criterion: str = "validation_accuracy"
    seed: int = 0
    optimizer: str = "adam"
    momentum: float = 0.0
    loss: str = "bce"
    restore_best: bool = False

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.max_epochs < 0:
            raise ValueError("max_epochs must be >= 0")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")
        if self.threshold < 0:
            raise ValueError("threshold must be >= 0")
        if self.criterion not in CRITERIA:
            raise ValueError(f"criterion must be one of {CRITERIA}")
        if self.optimizer not in OPTIMIZERS:
            raise ValueError(f"optimizer must be one of {OPTIMIZERS}")
        if not 0 <= self.momentum < 1:
            raise ValueError("momentum must lie in [0, 1)")
        numerics._check_loss(self.loss)

    def with_(self, **changes) -> "TrainConfig":
        return replace(self, **changes)


@dataclass
class TrainResult:
    epochs_run: int
    final_metric: float
    metric_history: list = field(default_factory=list)
    stopped_by: str = "max_epochs"  # patience | max_epochs
    wall_time: float = 0.0


def as_xy(data):
    """Accept a Dataset-like object (``.X``/``.y``) or an ``(X, y)`` pair."""
    if data is None:
        return None
    if hasattr(data, "X") and hasattr(data, "y"):
        X, y = data.X, data.y
    else:
        X, y = data
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64).ravel()
    if X.shape[0] != y.shape[0]:
        raise ValueError(f"{X.shape[0]} samples but {y.shape[0]} labels")
    return X, y


class Engine:
    """Forward/backward over a fixed network topology.

    Blocks that are frozen and read only from the input or other such
    blocks are *static*: their activations cannot change while training,
    so they are computed once per dataset and sliced per batch.
    """

    def __init__(self, net: NetworkGraph, loss: str = "bce"):
        if net.output is None:
            raise ValueError("cannot train a network without an output unit")
        self.net = net
        self.loss = loss
        static: set[int] = set()
        for blk in net.blocks:
            if not blk.trainable and all(isinstance(s, InputRef) or s in static for s in blk.sources):
                static.add(blk.id)
        self.static = static
        self.dynamic = [blk for blk in net.blocks if blk.id not in static]
        needed = set()
        for blk in self.dynamic:
            needed.update(s for s in blk.sources if not isinstance(s, InputRef))
        needed.update(net.output.sources)
        self.cached_ids = needed & static

    def precompute(self, X: np.ndarray) -> dict:
        acts: dict = {}
        for blk in self.net.blocks:
            if blk.id in self.static:
                z = numerics.affine_forward(blk.W, blk.b, gather_all(blk.sources, X, acts))
                acts[blk.id] = numerics.activation_forward(blk.activation, z)
        return {k: v for k, v in acts.items() if k in self.cached_ids}

    def forward(self, X: np.ndarray, cache: dict, idx=None):
        acts = {k: (v if idx is None else v[idx]) for k, v in cache.items()}
        traces = {}
        for blk in self.dynamic:
            tr = numerics.dense_forward(blk.W, blk.b, blk.activation, gather_all(blk.sources, X, acts))
            traces[blk.id] = tr
            acts[blk.id] = tr.a
        out = self.net.output
        h = gather_all(out.sources, X, acts)
        z = output_logit(self.net, acts)
        p = numerics.activation_forward(out.activation, z)
        return p, z, h, traces

    def predict(self, X: np.ndarray, cache: dict) -> np.ndarray:
        return self.forward(X, cache)[0]

    def gradients(self, X, y, cache, idx=None) -> dict:
        """Gradients of the mean loss for every trainable parameter array.

        Keys are ``id(param_array)``.
        """
        net = self.net
        p, z, h, traces = self.forward(X, cache, idx)
        dz = numerics.output_delta(self.loss, net.output.activation, z, p, y)
        grads = {}
        out = net.output
        if out.trainable:
            grads[id(out.w)] = h.T @ dz
            grads[id(out.b)] = np.array([dz.sum()])
        upstream: dict = {}
        pos = 0
        for s in out.sources:
            width = net.block(s).n_units
            if s not in self.static:
                upstream[s] = np.outer(dz, out.w[pos:pos + width])
            pos += width
        for blk in reversed(self.dynamic):
            if blk.id not in upstream:
                continue
            needs_dx = any(not isinstance(s, InputRef) and s not in self.static for s in blk.sources)
            dW, db, dx = numerics.backward(traces[blk.id], upstream.pop(blk.id), need_dx=needs_dx)
            if blk.trainable:
                grads[id(blk.W)] = dW
                grads[id(blk.b)] = db
            if needs_dx:
                pos = 0
                for s in blk.sources:
                    width = net.width_of(s)
                    if not isinstance(s, InputRef) and s not in self.static:
                        part = dx[:, pos:pos + width]
                        upstream[s] = upstream[s] + part if s in upstream else part
                    pos += width
        return grads


def loss_and_gradient(net: NetworkGraph, X, y, loss: str = "bce"):
    """Mean loss and the full gradient vector over trainable parameters.

    The vector follows ``netgraph.parameter_vector(net, trainable_only=True)``
    ordering.
    """
    eng = Engine(net, loss)
    cache = eng.precompute(X)
    grads = eng.gradients(X, y, cache)
    p = eng.predict(X, cache)
    flat = [grads.get(id(a), np.zeros_like(a)).ravel() for a in net.parameters(trainable_only=True)]
    vec = np.concatenate(flat) if flat else np.zeros(0)
    return numerics.loss_value(loss, p, y), vec


class _Optimizer:
    def __init__(self, params: list, cfg: TrainConfig):
        self.params = params
        self.cfg = cfg
        self.t = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]

    def step(self, grads: dict) -> None:
        cfg = self.cfg
        self.t += 1
        for i, p in enumerate(self.params):
            g = grads.get(id(p))
            if g is None:
                continue
            if cfg.optimizer == "sgd":
                if cfg.momentum:
                    self.m[i] = cfg.momentum * self.m[i] - cfg.learning_rate * g
                    p += self.m[i]
                else:
                    p -= cfg.learning_rate * g
                continue
            # Adam, Keras defaults
            b1, b2, eps = 0.9, 0.999, 1e-7
            self.m[i] = b1 * self.m[i] + (1 - b1) * g
            self.v[i] = b2 * self.v[i] + (1 - b2) * g * g
            lr_t = cfg.learning_rate * np.sqrt(1 - b2 ** self.t) / (1 - b1 ** self.t)
            p -= lr_t * self.m[i] / (np.sqrt(self.v[i]) + eps)


def accuracy_of(p: np.ndarray, y: np.ndarray, threshold: float = 0.5) -> float:
    return float(np.mean((p >= threshold) == (y >= 0.5)))


def _better(criterion: str, new, best) -> bool:
    """Lexicographic order used to pick the best epoch."""
    if best is None:
        return True
    if criterion == "train_loss":
        return new[0] < best[0]
    return new[0] > best[0] or (new[0] == best[0] and new[1] < best[1])


def train(net: NetworkGraph, train_data, valid_data=None, cfg: TrainConfig = TrainConfig()) -> TrainResult:
    """Train the trainable parameters of ``net`` in place.

    One epoch is a shuffled pass of mini-batches (the last partial batch is
    kept). After each epoch the criterion metric is measured: training loss
    on the full training set, or validation accuracy. Training stops after
    ``cfg.patience`` epochs without progress. For training loss, progress is
    a new minimum; for validation accuracy, a new maximum or a new minimum
    of the validation loss.
    """
    start = time.perf_counter()
    X, y = as_xy(train_data)
    if X.shape[0] == 0:
        raise ValueError("empty training set")
    if X.shape[1] != net.input_width:
        raise ValueError(f"training data width {X.shape[1]} != network input width {net.input_width}")
    valid = as_xy(valid_data)
    if cfg.criterion == "validation_accuracy":
        if valid is None or valid[0].shape[0] == 0:
            raise ValueError("validation_accuracy criterion needs non-empty validation data")
        if valid[0].shape[1] != net.input_width:
            raise ValueError(f"validation data width {valid[0].shape[1]} != network input width {net.input_width}")

    eng = Engine(net, cfg.loss)
    cache = eng.precompute(X)
    vcache = eng.precompute(valid[0]) if cfg.criterion == "validation_accuracy" else None

    def measure():
        if cfg.criterion == "train_loss":
            return numerics.loss_value(cfg.loss, eng.predict(X, cache), y), None
        p = eng.predict(valid[0], vcache)
        return accuracy_of(p, valid[1]), numerics.loss_value(cfg.loss, p, valid[1])

    params = net.parameters(trainable_only=True)
    opt = _Optimizer(params, cfg)
    rng = np.random.default_rng(cfg.seed)
    n = X.shape[0]
    history: list[float] = []
    best, best_params, since = None, None, 0
    best_acc, best_loss = -np.inf, np.inf
    stopped_by = "max_epochs"
    for _ in range(cfg.max_epochs):
        order = rng.permutation(n)
        if params:
            for lo in range(0, n, cfg.batch_size):
                idx = order[lo:lo + cfg.batch_size]
                opt.step(eng.gradients(X[idx], y[idx], cache, idx))
        metric = measure()
        history.append(metric[0])
        if _better(cfg.criterion, metric, best):
            best = metric
            if cfg.restore_best:
                best_params = [p.copy() for p in params]
        if cfg.criterion == "train_loss":
            progressed = metric[0] < best_loss
            best_loss = min(best_loss, metric[0])
        else:
            # accuracy is coarse on small sets; a falling validation loss also counts
            progressed = metric[0] > best_acc or metric[1] < best_loss
            best_acc, best_loss = max(best_acc, metric[0]), min(best_loss, metric[1])
        since = 0 if progressed else since + 1
        if since >= cfg.patience:
            stopped_by = "patience"
            break
    if cfg.restore_best and best_params is not None:
        for p, saved in zip(params, best_params):
            p[...] = saved
    if cfg.restore_best and best is not None:
        final = best[0]
    else:
        final = history[-1] if history else measure()[0]
    return TrainResult(
        epochs_run=len(history),
        final_metric=float(final),
        metric_history=history,
        stopped_by=stopped_by,
        wall_time=time.perf_counter() - start,
    )


def converged(previous: float, current: float, threshold: float, criterion: str = "validation_accuracy") -> bool:
    """True while the metric still improves by at least ``threshold``."""
    if criterion == "train_loss":
        return (previous - current) >= threshold
    if criterion == "validation_accuracy":
        return (current - previous) >= threshold
    raise ValueError(f"criterion must be one of {CRITERIA}")


def evaluate(net: NetworkGraph, data, metric: str = "accuracy", loss: str = "bce", threshold: float = 0.5) -> float:
    """Accuracy (prediction >= threshold means class 1) or mean loss."""
    X, y = as_xy(data)
    if X.shape[0] == 0:
        raise ValueError("cannot evaluate on an empty dataset")
    if X.shape[1] != net.input_width:
        raise ValueError(f"data width {X.shape[1]} != network input width {net.input_width}")
    eng = Engine(net, loss)
    p = eng.predict(X, eng.precompute(X))
    if metric == "accuracy":
        return accuracy_of(p, y, threshold)
    if metric == "loss":
        return numerics.loss_value(loss, p, y)
    raise ValueError("metric must be 'accuracy' or 'loss'")


def predict(net: NetworkGraph, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    eng = Engine(net)
    return eng.predict(X, eng.precompute(X))
