"""Dense algebra, activations, losses and their derivatives.

Everything here is a pure function over float64 numpy arrays. Batched
inputs are laid out one sample per row.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

ACTIVATIONS = ("relu", "sigmoid", "tanh", "identity")
LOSSES = ("bce", "mse")

# probability clamp for binary cross-entropy
BCE_EPS = 1e-7


def _check_activation(kind: str) -> None:
    if kind not in ACTIVATIONS:
        raise ValueError(f"unknown activation {kind!r}; expected one of {ACTIVATIONS}")


def _check_loss(kind: str) -> None:
    if kind not in LOSSES:
        raise ValueError(f"unknown loss {kind!r}; expected one of {LOSSES}")


def affine_forward(W, b, x):
    """Return ``W @ x + b``.

    ``x`` may be a single vector of length ``n_in`` or a batch of shape
    ``(n_samples, n_in)``; the batch form returns ``(n_samples, n_out)``.
    """
    W = np.asarray(W, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if W.ndim != 2 or b.shape != (W.shape[0],) or x.shape[-1] != W.shape[1]:
        raise ValueError(
            f"shape mismatch: W {W.shape}, b {b.shape}, x {x.shape} "
            f"(need W (n_out, n_in), b (n_out,), x (..., n_in))"
        )
    return x @ W.T + b


def sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def activation_forward(kind: str, z):
    _check_activation(kind)
    z = np.asarray(z, dtype=np.float64)
    if kind == "relu":
        return np.maximum(z, 0.0)
    if kind == "sigmoid":
        return sigmoid(z)
    if kind == "tanh":
        return np.tanh(z)
    return z.copy()


def activation_derivative(kind: str, z, a=None):
    """Derivative of the activation at pre-activation ``z``.

    ``a`` is the already computed activation, reused when given.
    """
    _check_activation(kind)
    z = np.asarray(z, dtype=np.float64)
    if kind == "relu":
        return (z > 0).astype(np.float64)
    if a is None:
        a = activation_forward(kind, z)
    if kind == "sigmoid":
        return a * (1.0 - a)
    if kind == "tanh":
        return 1.0 - a * a
    return np.ones_like(z)


def _loss_inputs(y_pred, y_true):
    y_pred = np.asarray(y_pred, dtype=np.float64).ravel()
    y_true = np.asarray(y_true, dtype=np.float64).ravel()
    if y_pred.shape != y_true.shape:
        raise ValueError(f"length mismatch: y_pred {y_pred.shape[0]}, y_true {y_true.shape[0]}")
    if y_pred.size == 0:
        raise ValueError("loss of an empty batch is undefined")
    return y_pred, y_true


def loss_value(kind: str, y_pred, y_true) -> float:
    """Mean loss over samples. BCE clamps probabilities to [eps, 1 - eps]."""
    _check_loss(kind)
    y_pred, y_true = _loss_inputs(y_pred, y_true)
    if kind == "mse":
        return float(np.mean((y_pred - y_true) ** 2))
    p = np.clip(y_pred, BCE_EPS, 1.0 - BCE_EPS)
    return float(np.mean(-(y_true * np.log(p) + (1.0 - y_true) * np.log1p(-p))))


def loss_gradient(kind: str, y_pred, y_true):
    """Gradient of :func:`loss_value` with respect to ``y_pred``."""
    _check_loss(kind)
    y_pred, y_true = _loss_inputs(y_pred, y_true)
    n = y_pred.size
    if kind == "mse":
        return 2.0 * (y_pred - y_true) / n
    p = np.clip(y_pred, BCE_EPS, 1.0 - BCE_EPS)
    inside = (y_pred > BCE_EPS) & (y_pred < 1.0 - BCE_EPS)
    g = (-(y_true / p) + (1.0 - y_true) / (1.0 - p)) / n
    return np.where(inside, g, 0.0)


def output_delta(loss: str, activation: str, z, p, y_true):
    """Gradient of the mean loss with respect to the output pre-activation.

    Sigmoid with BCE uses the fused form ``(p - y) / n``, which stays
    informative when the sigmoid saturates past the clamp.
    """
    if loss == "bce" and activation == "sigmoid":
        p = np.asarray(p, dtype=np.float64).ravel()
        y = np.asarray(y_true, dtype=np.float64).ravel()
        return (p - y) / p.size
    return loss_gradient(loss, p, y_true) * activation_derivative(activation, z, p).ravel()


@dataclass
class BlockTrace:
    """What one dense block saw and produced during a forward pass."""

    x: np.ndarray  # (n, n_in)
    z: np.ndarray  # (n, n_out)
    a: np.ndarray  # (n, n_out)
    W: np.ndarray
    activation: str


def dense_forward(W, b, activation: str, x) -> BlockTrace:
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    z = affine_forward(W, b, x)
    return BlockTrace(x=x, z=z, a=activation_forward(activation, z), W=W, activation=activation)


def backward(trace: BlockTrace | None, upstream, need_dx: bool = True):
    """Backpropagate ``upstream`` (dL/da, shape ``(n, n_out)``) through a block.

    Returns ``(dW, db, dx)``; ``dx`` is None when ``need_dx`` is false.
    """
    if trace is None:
        raise ValueError("backward needs the forward trace of the same block")
    upstream = np.asarray(upstream, dtype=np.float64)
    if upstream.shape != trace.z.shape:
        raise ValueError(f"upstream gradient shape {upstream.shape} != block output {trace.z.shape}")
    dz = upstream * activation_derivative(trace.activation, trace.z, trace.a)
    dW = dz.T @ trace.x
    db = dz.sum(axis=0)
    dx = dz @ trace.W if need_dx else None
    return dW, db, dx


def finite_difference_gradient(f: Callable[[np.ndarray], float], theta, h: float = 1e-5):
    """Central-difference gradient of scalar ``f`` at ``theta``."""
    if h <= 0:
        raise ValueError("step h must be positive")
    theta = np.array(theta, dtype=np.float64, copy=True).ravel()
    grad = np.zeros_like(theta)
    for i in range(theta.size):
        orig = theta[i]
        theta[i] = orig + h
        fp = f(theta.copy())
        theta[i] = orig - h
        fm = f(theta.copy())
        theta[i] = orig
        grad[i] = (fp - fm) / (2.0 * h)
    return grad
