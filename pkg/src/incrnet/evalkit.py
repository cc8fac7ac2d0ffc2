"""Classification metrics, multi-run averaging and model comparison tables."""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

log = logging.getLogger(__name__)

REPORT_FORMAT = "incrnet.metrics"
COMPARISON_FORMAT = "incrnet.comparison"
SCHEMA_VERSION = 1
METRIC_NAMES = ("precision", "recall", "f1", "fnr", "accuracy", "wall_time")


class ReportFormatError(ValueError):
    pass


@dataclass(frozen=True)
class Confusion:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


def confusion(predictions, labels, threshold: float = 0.5) -> Confusion:
    """Counts with ``prediction >= threshold`` read as class 1."""
    p = np.asarray(predictions, dtype=np.float64).ravel()
    y = np.asarray(labels, dtype=np.float64).ravel()
    if p.shape != y.shape:
        raise ValueError(f"length mismatch: {p.size} predictions, {y.size} labels")
    if not np.isin(y, (0.0, 1.0)).all():
        raise ValueError("labels must be 0 or 1")
    pred = p >= threshold
    pos = y == 1.0
    return Confusion(
        tp=int(np.sum(pred & pos)),
        fp=int(np.sum(pred & ~pos)),
        tn=int(np.sum(~pred & ~pos)),
        fn=int(np.sum(~pred & pos)),
    )


@dataclass
class MetricsReport:
    precision: float = 0.0
    recall: float = 0.0
    f1: float = 0.0
    fnr: float = 0.0
    accuracy: float = 0.0
    wall_time: float = 0.0
    runs: int = 1
    per_run: list = field(default_factory=list)
    degenerate: list = field(default_factory=list)  # metrics that hit 0/0
    confusion: dict | None = None
    failures: list = field(default_factory=list)

    def values(self) -> dict:
        return {k: getattr(self, k) for k in METRIC_NAMES}

    def to_dict(self) -> dict:
        d = asdict(self)
        d["per_run"] = [r.to_dict() if isinstance(r, MetricsReport) else r for r in self.per_run]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "MetricsReport":
        d = dict(d)
        d["per_run"] = [cls.from_dict(r) for r in d.get("per_run", [])]
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in d.items() if k in known})


def _ratio(num: int, den: int, name: str, flags: list) -> float:
    if den == 0:
        flags.append(name)
        return 0.0
    return num / den


def metrics(c: Confusion, wall_time: float = 0.0) -> MetricsReport:
    """Single-run report. 0/0 gives 0 and lists the metric in ``degenerate``."""
    flags: list = []
    p = _ratio(c.tp, c.tp + c.fp, "precision", flags)
    r = _ratio(c.tp, c.tp + c.fn, "recall", flags)
    f1 = _ratio(2 * p * r, p + r, "f1", flags) if (p + r) > 0 else _ratio(0, 0, "f1", flags)
    fnr = _ratio(c.fn, c.fn + c.tp, "fnr", flags)
    acc = _ratio(c.tp + c.tn, c.total, "accuracy", flags)
    return MetricsReport(
        precision=p, recall=r, f1=f1, fnr=fnr, accuracy=acc, wall_time=wall_time,
        runs=1, degenerate=flags, confusion=asdict(c),
    )


def average(reports: Sequence[MetricsReport]) -> MetricsReport:
    if not reports:
        raise ValueError("nothing to average")
    out = MetricsReport(runs=len(reports), per_run=list(reports))
    for name in METRIC_NAMES:
        setattr(out, name, float(np.mean([getattr(r, name) for r in reports])))
    out.degenerate = sorted({flag for r in reports for flag in r.degenerate})
    return out


def multi_run(evaluate_fn: Callable[[int], MetricsReport], n_runs: int = 10, seeds: Sequence[int] | None = None):
    """Run ``evaluate_fn(seed)`` per seed and average the reports.

    A failing run is recorded in ``failures``; the average covers completed
    runs and requires at least half of them to complete.
    """
    if seeds is None:
        seeds = list(range(n_runs))
    seeds = list(seeds)
    if len(seeds) != n_runs:
        raise ValueError(f"need {n_runs} seeds, got {len(seeds)}")
    if n_runs < 1:
        raise ValueError("n_runs must be >= 1")
    if len(set(seeds)) != len(seeds):
        log.warning("multi_run called with repeated seeds; runs will repeat")
    done, failures = [], []
    for s in seeds:
        try:
            done.append(evaluate_fn(s))
        except Exception as exc:  # noqa: BLE001 - failures are reported, not raised
            log.exception("run with seed %s failed", s)
            failures.append({"seed": s, "error": f"{type(exc).__name__}: {exc}"})
    if len(done) * 2 < n_runs:
        raise RuntimeError(f"only {len(done)} of {n_runs} runs completed: {failures}")
    report = average(done)
    report.failures = failures
    return report


# ---------------------------------------------------------------------------
# Files
# ---------------------------------------------------------------------------


def save_report(report: MetricsReport, path, name: str = "") -> Path:
    doc = {"format": REPORT_FORMAT, "version": SCHEMA_VERSION, "name": name, "report": report.to_dict()}
    path = Path(path)
    path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
    return path


def load_report(path) -> tuple[str, MetricsReport]:
    try:
        doc = json.loads(Path(path).read_text())
        if doc.get("format") != REPORT_FORMAT or doc.get("version") != SCHEMA_VERSION:
            raise ReportFormatError(f"{path}: expected {REPORT_FORMAT} version {SCHEMA_VERSION}")
        return doc.get("name") or Path(path).stem, MetricsReport.from_dict(doc["report"])
    except (json.JSONDecodeError, KeyError, TypeError, AttributeError) as exc:
        raise ReportFormatError(f"{path}: unreadable metrics report ({exc})") from exc


def write_history_csv(path, history: Sequence[float], metric: str = "metric") -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["epoch", metric])
        for i, v in enumerate(history, start=1):
            w.writerow([i, repr(float(v))])
    return path


# ---------------------------------------------------------------------------
# Comparison
# ---------------------------------------------------------------------------


@dataclass
class Comparison:
    names: list
    columns: list
    values: list  # rows of metric values
    deltas: list  # rows of differences from the first row

    def to_dict(self) -> dict:
        return {
            "format": COMPARISON_FORMAT,
            "version": SCHEMA_VERSION,
            "columns": list(self.columns),
            "rows": [
                {"name": n, "values": dict(zip(self.columns, v)), "delta": dict(zip(self.columns, d))}
                for n, v, d in zip(self.names, self.values, self.deltas)
            ],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Comparison":
        if doc.get("format") != COMPARISON_FORMAT or doc.get("version") != SCHEMA_VERSION:
            raise ReportFormatError(f"expected {COMPARISON_FORMAT} version {SCHEMA_VERSION}")
        cols = list(doc["columns"])
        rows = doc["rows"]
        return cls(
            [r["name"] for r in rows],
            cols,
            [[r["values"][c] for c in cols] for r in rows],
            [[r["delta"][c] for c in cols] for r in rows],
        )

    def to_text(self) -> str:
        width = max(len("model"), *(len(n) for n in self.names))
        head = f"{'model':<{width}}  " + "  ".join(f"{c:>10}" for c in self.columns)
        lines = [head, "-" * len(head)]
        for i, (n, v, d) in enumerate(zip(self.names, self.values, self.deltas)):
            lines.append(f"{n:<{width}}  " + "  ".join(f"{x:>10.4f}" for x in v))
            if i:
                lines.append(f"{'  vs first':<{width}}  " + "  ".join(f"{x:>+10.4f}" for x in d))
        return "\n".join(lines)


def compare_report(models: Sequence[tuple[str, MetricsReport]], columns: Sequence[str] = METRIC_NAMES) -> Comparison:
    """One row per model, one column per metric, deltas against row one."""
    if len(models) < 2:
        raise ValueError("need at least two models to compare")
    names = [n for n, _ in models]
    vals = [[float(getattr(r, c)) for c in columns] for _, r in models]
    first = vals[0]
    deltas = [[v - f for v, f in zip(row, first)] for row in vals]
    return Comparison(names, list(columns), vals, deltas)
