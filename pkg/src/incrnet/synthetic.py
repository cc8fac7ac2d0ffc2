"""Deterministic synthetic datasets used by the tests, demos and CLI fixture."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .datapipe import Dataset


def xor_dataset(n: int = 2000, noise: float = 0.1, seed: int = 0) -> Dataset:
    """Four Gaussian blobs at (+-1, +-1); label 1 where both signs agree."""
    rng = np.random.default_rng(seed)
    centers = rng.choice([-1.0, 1.0], size=(n, 2))
    X = centers + rng.normal(0.0, noise, size=(n, 2))
    y = (centers[:, 0] * centers[:, 1] > 0).astype(np.float64)
    return Dataset(["x1", "x2"], X, y, provenance=f"xor(n={n}, noise={noise}, seed={seed})")


def linear_dataset(n: int = 1000, seed: int = 0, margin: float = 0.1) -> Dataset:
    """Two features, label = x1 + x2 > 0, points within ``margin`` removed."""
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1.0, 1.0, size=(4 * n, 2))
    s = X.sum(axis=1)
    X = X[np.abs(s) > margin][:n]
    y = (X.sum(axis=1) > 0).astype(np.float64)
    return Dataset(["x1", "x2"], X, y, provenance=f"linear(n={n}, seed={seed})")


def _rotation(d: int, degrees: float) -> np.ndarray:
    """Rotation by ``degrees`` in the plane of the first two coordinates."""
    a = np.deg2rad(degrees)
    R = np.eye(d)
    R[:2, :2] = [[np.cos(a), -np.sin(a)], [np.sin(a), np.cos(a)]]
    return R


DRIFT_FEATURES = 8


def drift_score(X: np.ndarray, degrees: float = 0.0) -> np.ndarray:
    """Nonlinear class score; ``degrees`` rotates the boundary in the x1-x2 plane."""
    Z = X @ _rotation(X.shape[1], degrees)  # rotate the points the opposite way
    u, v = Z[:, 0], Z[:, 1]
    return u + 0.5 * np.sin(2.0 * v) + 0.3 * Z[:, 2] * Z[:, 3]


def drift_threshold(positive_rate: float, d: int = 8) -> float:
    """Score cut giving ``positive_rate`` positives for standard normal features."""
    ref = np.random.default_rng(12345).normal(size=(200_000, d))
    return float(np.quantile(drift_score(ref), 1.0 - positive_rate))


def drift_chunks(
    n_per_chunk: int = 10_000,
    degrees: float = 30.0,
    seed: int = 0,
    d: int = DRIFT_FEATURES,
    label_noise: float = 0.0,
    positive_rate: float = 0.01,
    day: float = 86_400.0,
) -> tuple[Dataset, Dataset]:
    """Two time-ordered chunks whose decision boundaries differ by a rotation.

    Features are standard normal; chunk 2's boundary is chunk 1's rotated
    by ``degrees`` in the x1-x2 plane. The positive class is rare (about
    ``positive_rate`` of samples), as fraud is. A fraction ``label_noise``
    of labels is flipped. Each chunk carries a ``Time`` aux column inside
    its day.
    """
    rng = np.random.default_rng(seed)
    names = [f"V{i + 1}" for i in range(d)]
    cut = drift_threshold(positive_rate, d)
    chunks = []
    for k, angle in enumerate((0.0, degrees)):
        X = rng.normal(size=(n_per_chunk, d))
        y = (drift_score(X, angle) > cut).astype(np.float64)
        flip = rng.random(n_per_chunk) < label_noise
        y[flip] = 1.0 - y[flip]
        t = np.sort(rng.uniform(k * day, (k + 1) * day, size=n_per_chunk))
        chunks.append(
            Dataset(names, X, y, provenance=f"drift(chunk={k + 1}, degrees={angle}, seed={seed})", aux={"Time": t})
        )
    return chunks[0], chunks[1]


def write_fraud_csv(path, n: int = 1000, seed: int = 7, fraud_rate: float = 0.12, n_duplicates: int = 6) -> Path:
    """Small credit-card-like CSV: Time, V1..V28, Amount, Class.

    Transactions span two days; day 2 fraud patterns are rotated relative to
    day 1. ``n_duplicates`` rows are exact copies of earlier fraud rows.
    """
    rng = np.random.default_rng(seed)
    d = 28
    n_unique = n - n_duplicates
    t = np.sort(rng.uniform(0.0, 172_800.0, size=n_unique))
    day2 = t >= 86_400.0
    y = (rng.random(n_unique) < fraud_rate).astype(int)
    y[:3] = 1  # both days always hold some fraud
    y[-3:] = 1
    X = rng.normal(size=(n_unique, d))
    shift = np.zeros(d)
    shift[:4] = [2.0, -1.5, 1.0, 0.5]
    R = _rotation(d, 30.0)
    X[y == 1] += np.where(day2[y == 1, None], shift @ R.T, shift)
    amount = np.round(np.exp(rng.normal(3.0, 1.0, size=n_unique)) + 60.0 * y, 2)
    rows = [
        [round(ti, 0), *np.round(xi, 6), ai, yi] for ti, xi, ai, yi in zip(t, X, amount, y)
    ]
    fraud_rows = [r for r in rows if r[-1] == 1]
    for i in range(n_duplicates):
        rows.append(list(fraud_rows[i % len(fraud_rows)]))
    rows.sort(key=lambda r: r[0])
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["Time", *[f"V{i + 1}" for i in range(d)], "Amount", "Class"])
        for r in rows:
            w.writerow([f"{r[0]:.0f}", *[f"{v:.6f}" for v in r[1:-2]], f"{r[-2]:.2f}", int(r[-1])])
    return path
