"""Dataset preparation: loading, cleaning, scaling, grouping, splitting, SMOTE."""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree

from .netgraph import decode_array, encode_array

log = logging.getLogger(__name__)

DATA_FORMAT = "incrnet.dataset"
DATA_FORMAT_VERSION = 1


class DataError(ValueError):
    pass


@dataclass
class Dataset:
    """Feature matrix with binary labels.

    ``aux`` holds row-aligned columns that are not features (the
    transaction time, for instance); they follow every row selection.
    """

    feature_names: list
    X: np.ndarray
    y: np.ndarray
    provenance: str = ""
    aux: dict = field(default_factory=dict)

    def __post_init__(self):
        self.X = np.atleast_2d(np.asarray(self.X, dtype=np.float64))
        self.y = np.asarray(self.y, dtype=np.float64).ravel()
        if self.X.shape[0] != self.y.shape[0]:
            raise DataError(f"{self.X.shape[0]} rows but {self.y.shape[0]} labels")
        if len(self.feature_names) != self.X.shape[1]:
            raise DataError(f"{len(self.feature_names)} feature names for {self.X.shape[1]} columns")
        if self.y.size and not np.isin(self.y, (0.0, 1.0)).all():
            raise DataError("labels must be 0 or 1")
        for k, v in self.aux.items():
            if len(v) != self.n:
                raise DataError(f"aux column {k!r} has {len(v)} rows, expected {self.n}")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def take(self, idx, provenance: str | None = None) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(
            list(self.feature_names),
            self.X[idx],
            self.y[idx],
            self.provenance if provenance is None else provenance,
            {k: np.asarray(v)[idx] for k, v in self.aux.items()},
        )

    def columns(self, cols: Sequence[int]) -> "Dataset":
        cols = list(cols)
        return Dataset(
            [self.feature_names[c] for c in cols], self.X[:, cols], self.y.copy(), self.provenance, dict(self.aux)
        )

    def class_counts(self) -> dict:
        n1 = int(self.y.sum())
        return {"0": self.n - n1, "1": n1}


# ---------------------------------------------------------------------------
# IO
# ---------------------------------------------------------------------------


def load_csv(path, label_column: str = "Class", drop_columns: Sequence[str] = ("Time",)) -> Dataset:
    """Read a headed, comma-separated numeric file.

    Dropped columns are kept out of the features but retained in
    ``Dataset.aux`` (the time column is needed later for chunking).
    Row and column numbers in errors are 1-based, counting data rows only.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip().strip('"') for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        if label_column not in header:
            raise DataError(f"{path}: label column {label_column!r} not found in header")
        rows = []
        for r, row in enumerate(reader, start=1):
            if not row:
                continue
            if len(row) != len(header):
                raise DataError(f"{path}: row {r} has {len(row)} fields, header has {len(header)}")
            try:
                rows.append([float(v.strip().strip('"')) for v in row])
            except ValueError:
                for c, v in enumerate(row, start=1):
                    try:
                        float(v.strip().strip('"'))
                    except ValueError:
                        raise DataError(f"{path}: non-numeric value {v!r} at row {r}, column {c}") from None
    data = np.asarray(rows, dtype=np.float64).reshape(len(rows), len(header))
    label_idx = header.index(label_column)
    dropped = [c for c in drop_columns if c in header]
    feat_idx = [i for i, h in enumerate(header) if i != label_idx and h not in dropped]
    y = data[:, label_idx]
    if not np.isin(y, (0.0, 1.0)).all():
        # coerce any two-valued label to {0, 1}: the larger value is the positive class
        values = np.unique(y)
        if values.size > 2:
            raise DataError(f"{path}: label column {label_column!r} has {values.size} distinct values")
        y = (y == values.max()).astype(np.float64)
    aux = {c: data[:, header.index(c)] for c in dropped}
    return Dataset([header[i] for i in feat_idx], data[:, feat_idx], y, provenance=str(path), aux=aux)


def save_dataset(ds: Dataset, path) -> Path:
    doc = {
        "format": DATA_FORMAT,
        "version": DATA_FORMAT_VERSION,
        "feature_names": list(ds.feature_names),
        "provenance": ds.provenance,
        "X": encode_array(ds.X),
        "y": encode_array(ds.y),
    }
    path = Path(path)
    path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
    return path


def load_dataset(path) -> Dataset:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: not valid JSON") from exc
    if doc.get("format") != DATA_FORMAT or doc.get("version") != DATA_FORMAT_VERSION:
        raise DataError(f"{path}: expected {DATA_FORMAT} version {DATA_FORMAT_VERSION}")
    return Dataset(doc["feature_names"], decode_array(doc["X"]), decode_array(doc["y"]), doc.get("provenance", ""))


# ---------------------------------------------------------------------------
# Cleaning and scaling
# ---------------------------------------------------------------------------


def dedup(ds: Dataset, include_aux: bool = True) -> tuple[Dataset, int]:
    """Drop exact duplicate rows, keeping the first occurrence.

    A row is features + label, plus the aux columns when ``include_aux``.
    """
    parts = [ds.X, ds.y[:, None]]
    if include_aux:
        parts += [np.asarray(v, dtype=np.float64)[:, None] for v in ds.aux.values()]
    rows = np.ascontiguousarray(np.concatenate(parts, axis=1))
    if rows.shape[0] == 0:
        return ds, 0
    # +0.0 folds -0.0 into 0.0 so the byte view compares by value
    keys = (rows + 0.0).view(np.dtype((np.void, rows.dtype.itemsize * rows.shape[1]))).ravel()
    _, first = np.unique(keys, return_index=True)
    keep = np.sort(first)
    return ds.take(keep), ds.n - keep.size


@dataclass
class RangeRecord:
    """Per-feature training min/max and the target interval."""

    lo: float
    hi: float
    mins: np.ndarray
    maxs: np.ndarray
    constant: list = field(default_factory=list)

    def transform(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        span = self.maxs - self.mins
        safe = np.where(span > 0, span, 1.0)
        out = self.lo + (X - self.mins) * (self.hi - self.lo) / safe
        return np.where(span > 0, out, 0.5 * (self.lo + self.hi))

    def inverse(self, Z) -> np.ndarray:
        Z = np.asarray(Z, dtype=np.float64)
        return self.mins + (Z - self.lo) * (self.maxs - self.mins) / (self.hi - self.lo)

    def apply(self, ds: Dataset) -> Dataset:
        return Dataset(list(ds.feature_names), self.transform(ds.X), ds.y.copy(), ds.provenance, dict(ds.aux))

    def to_dict(self) -> dict:
        return {
            "lo": self.lo,
            "hi": self.hi,
            "mins": self.mins.tolist(),
            "maxs": self.maxs.tolist(),
            "constant": list(self.constant),
        }

    @classmethod
    def from_dict(cls, d) -> "RangeRecord":
        return cls(d["lo"], d["hi"], np.asarray(d["mins"], float), np.asarray(d["maxs"], float), d.get("constant", []))


def normalize_range(ds: Dataset, lo: float = -5.0, hi: float = 5.0) -> tuple[Dataset, RangeRecord]:
    """Map each feature's observed [min, max] affinely onto [lo, hi].

    Constant features go to the midpoint and are listed in the record.
    The record transforms other data with these statistics; values outside
    the training range map outside [lo, hi].
    """
    if not hi > lo:
        raise ValueError("need hi > lo")
    mins, maxs = ds.X.min(axis=0), ds.X.max(axis=0)
    constant = [ds.feature_names[i] for i in np.flatnonzero(maxs == mins)]
    if constant:
        log.warning("constant features mapped to the midpoint: %s", constant)
    rec = RangeRecord(float(lo), float(hi), mins, maxs, constant)
    out = rec.apply(ds)
    # pin the extremes exactly
    span = maxs > mins
    at_min = (ds.X == mins) & span
    at_max = (ds.X == maxs) & span
    out.X[at_min] = lo
    out.X[at_max] = hi
    return out, rec


# ---------------------------------------------------------------------------
# Relevancy and grouping
# ---------------------------------------------------------------------------


def _mutual_information(x: np.ndarray, y: np.ndarray, bins: int = 16) -> float:
    """Histogram MI between a feature and a binary label, over H(label)."""
    edges = np.linspace(x.min(), x.max(), bins + 1)
    xb = np.clip(np.searchsorted(edges, x, side="right") - 1, 0, bins - 1)
    joint = np.zeros((bins, 2))
    np.add.at(joint, (xb, y.astype(int)), 1.0)
    joint /= joint.sum()
    px, py = joint.sum(axis=1), joint.sum(axis=0)
    nz = joint > 0
    mi = float(np.sum(joint[nz] * np.log(joint[nz] / np.outer(px, py)[nz])))
    hy = float(-np.sum(py[py > 0] * np.log(py[py > 0])))
    return min(max(mi / hy, 0.0), 1.0)


def relevancy_scores(ds: Dataset, method: str = "correlation") -> np.ndarray:
    """Relevancy of every feature to the label, in [0, 1].

    ``correlation``: absolute Pearson correlation. ``mutual_information``:
    16-bin histogram estimate divided by the label entropy.
    """
    if ds.n < 2:
        raise DataError("need at least two samples")
    y = ds.y
    if y.min() == y.max():
        raise DataError("label is constant; relevancy undefined")
    scores = np.zeros(ds.d)
    for j in range(ds.d):
        x = ds.X[:, j]
        if x.min() == x.max():
            log.warning("feature %s is constant; relevancy 0", ds.feature_names[j])
            continue
        if method == "correlation":
            xc, yc = x - x.mean(), y - y.mean()
            r = float(xc @ yc / math.sqrt(float(xc @ xc) * float(yc @ yc)))
            scores[j] = min(abs(r), 1.0)
        elif method == "mutual_information":
            scores[j] = _mutual_information(x, y)
        else:
            raise ValueError(f"unknown relevancy method {method!r}")
    return scores


@dataclass
class FeatureGroup:
    indices: list
    mean_relevancy: float


@dataclass
class GroupPlan:
    groups: list
    order: str = "descending"

    def to_dict(self) -> dict:
        return {
            "order": self.order,
            "groups": [{"indices": list(g.indices), "mean_relevancy": g.mean_relevancy} for g in self.groups],
        }


def make_groups(scores, k: int, order: str = "descending") -> GroupPlan:
    """Partition features into ``k`` near-equal bins.

    ``descending``/``ascending``: bins of the relevancy ranking, most (or
    least) relevant bin first. ``none``: bins of the original feature order.
    """
    scores = np.asarray(scores, dtype=np.float64)
    d = scores.size
    if not 1 <= k <= d:
        raise ValueError(f"group count must be in [1, {d}], got {k}")
    if order not in ("descending", "ascending", "none"):
        raise ValueError(f"unknown order {order!r}")
    if order == "none":
        ranked = np.arange(d)
    else:
        ranked = np.argsort(-scores, kind="stable")
    bins = np.array_split(ranked, k)
    groups = [FeatureGroup([int(i) for i in b], float(scores[b].mean())) for b in bins]
    if order == "ascending":
        groups.reverse()
    return GroupPlan(groups, order)


def subdatasets(ds: Dataset, plan: GroupPlan) -> list[Dataset]:
    """The i-th dataset holds the features of groups 1..i, in index order."""
    out, seen = [], []
    for g in plan.groups:
        if set(seen) & set(g.indices):
            raise DataError("groups overlap")
        seen += list(g.indices)
        out.append(ds.columns(sorted(seen)))
    return out


# ---------------------------------------------------------------------------
# Chunking and splitting
# ---------------------------------------------------------------------------


def chunk_by_time(ds: Dataset, time_values=None, boundary: float = 86400.0, time_column: str = "Time"):
    """Rows with time < boundary form chunk 1, the rest chunk 2."""
    t = ds.aux.get(time_column) if time_values is None else time_values
    if t is None:
        raise DataError(f"no time values: pass them or keep {time_column!r} as an aux column")
    t = np.asarray(t, dtype=np.float64)
    if t.size != ds.n:
        raise DataError(f"{t.size} time values for {ds.n} rows")
    first = t < boundary
    if first.all() or not first.any():
        raise DataError(f"time boundary {boundary} leaves one chunk empty")
    return ds.take(np.flatnonzero(first)), ds.take(np.flatnonzero(~first))


@dataclass
class SplitSpec:
    fractions: list  # [(name, fraction), ...]
    stratified: bool = True
    seed: int = 0

    def __post_init__(self):
        total = sum(f for _, f in self.fractions)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"split fractions sum to {total}, not 1")
        if any(f < 0 for _, f in self.fractions):
            raise ValueError("split fractions must be non-negative")


def _allocate(n: int, fractions: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Largest-remainder allocation of ``n`` items; ties broken by ``rng``."""
    exact = n * fractions
    counts = np.floor(exact).astype(int)
    rest = n - counts.sum()
    if rest:
        frac = exact - counts
        tiebreak = rng.permutation(fractions.size)
        order = sorted(range(fractions.size), key=lambda i: (-round(frac[i], 12), tiebreak[i]))
        for i in order[:rest]:
            counts[i] += 1
    return counts


def stratified_split(ds: Dataset, spec: SplitSpec) -> dict:
    """Split into named parts, allocating each class proportionally."""
    names = [name for name, _ in spec.fractions]
    fr = np.asarray([f for _, f in spec.fractions], dtype=np.float64)
    rng = np.random.default_rng(spec.seed)
    groups = [np.flatnonzero(ds.y == c) for c in (0.0, 1.0)] if spec.stratified else [np.arange(ds.n)]
    parts: list[list] = [[] for _ in names]
    for idx in groups:
        if idx.size == 0:
            continue
        if spec.stratified and idx.size < len(names):
            raise DataError(f"class with {idx.size} samples cannot be split into {len(names)} parts")
        perm = idx[rng.permutation(idx.size)]
        counts = _allocate(idx.size, fr, rng)
        pos = 0
        for i, c in enumerate(counts):
            parts[i].append(perm[pos:pos + c])
            pos += c
    out = {}
    for name, p in zip(names, parts):
        sel = np.sort(np.concatenate(p)) if p else np.zeros(0, dtype=int)
        out[name] = ds.take(sel, provenance=f"{ds.provenance}[{name}]")
    return out


# ---------------------------------------------------------------------------
# SMOTE
# ---------------------------------------------------------------------------


def smote_target_count(n_minority: int, n_majority: int, ratio: float) -> int:
    return int(round(ratio * n_majority))


def smote(ds: Dataset, target_ratio: float = 0.33, k_neighbors: int = 5, seed: int = 0) -> Dataset:
    """Oversample the minority class up to ``target_ratio`` = minority/majority.

    Each synthetic row interpolates between a random minority row and one
    of its ``k_neighbors`` nearest minority rows, with a uniform
    coefficient in [0, 1]. Original rows are kept and come first.
    """
    counts = ds.class_counts()
    n0, n1 = counts["0"], counts["1"]
    minority = 1.0 if n1 <= n0 else 0.0
    n_min, n_maj = min(n0, n1), max(n0, n1)
    if n_maj == 0:
        raise DataError("dataset has a single class")
    target = smote_target_count(n_min, n_maj, target_ratio)
    if target <= n_min:
        return ds.take(np.arange(ds.n))
    if n_min < k_neighbors + 1:
        raise DataError(f"minority class has {n_min} samples; SMOTE with k={k_neighbors} needs at least {k_neighbors + 1}")
    rng = np.random.default_rng(seed)
    Xm = ds.X[ds.y == minority]
    _, nbrs = cKDTree(Xm).query(Xm, k=k_neighbors + 1)
    nbrs = nbrs[:, 1:]  # drop the point itself
    n_new = target - n_min
    base = rng.integers(0, n_min, size=n_new)
    pick = nbrs[base, rng.integers(0, k_neighbors, size=n_new)]
    gap = rng.random(n_new)[:, None]
    synth = Xm[base] + gap * (Xm[pick] - Xm[base])
    X = np.concatenate([ds.X, synth])
    y = np.concatenate([ds.y, np.full(n_new, minority)])
    return Dataset(list(ds.feature_names), X, y, f"{ds.provenance}+smote({target_ratio})")
