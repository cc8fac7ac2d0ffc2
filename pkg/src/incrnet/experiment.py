"""The four-model comparison on a pair of time-ordered chunks.

Models, all scored on chunk-2 test data except the first:

* ``initial@c1``: initial topology trained on chunk 1, tested on chunk 1
* ``initial@c2``: the same topology trained from scratch on chunk 2
* ``refit@c2``: ``initial@c1`` with every weight retrained on chunk 2
* ``final@c2``: transfer + incremental growth on chunk 2
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import datapipe, evalkit, growth, traincore
from .datapipe import Dataset, SplitSpec
from .growth import GrowthConfig

MODEL_NAMES = ("initial@c1", "initial@c2", "refit@c2", "final@c2")

CHUNK1_SPLIT = [("train", 0.70), ("test", 0.30)]
CHUNK2_SPLIT = [("train", 0.70), ("valid", 0.15), ("test", 0.15)]


@dataclass
class PreparedChunks:
    chunk1: dict  # name -> Dataset
    chunk2: dict
    scaling: datapipe.RangeRecord | None = None
    summary: dict = field(default_factory=dict)


def prepare_chunks(
    chunk1: Dataset,
    chunk2: Dataset,
    seed: int = 0,
    lo: float = -5.0,
    hi: float = 5.0,
    smote_ratio: float | None = 0.33,
    smote_k: int = 5,
    smote_parts: tuple = ("train", "valid", "test"),
    split1=CHUNK1_SPLIT,
    split2=CHUNK2_SPLIT,
    stratified: bool = True,
) -> PreparedChunks:
    """Stratified splits, range scaling fitted on chunk-1 train, then SMOTE.

    SMOTE is applied to the parts named in ``smote_parts`` and skipped when
    ``smote_ratio`` is None or already met.
    """
    p1 = datapipe.stratified_split(chunk1, SplitSpec(list(split1), stratified, seed=seed))
    p2 = datapipe.stratified_split(chunk2, SplitSpec(list(split2), stratified, seed=seed + 1))
    _, rec = datapipe.normalize_range(p1["train"], lo, hi)
    p1 = {k: rec.apply(v) for k, v in p1.items()}
    p2 = {k: rec.apply(v) for k, v in p2.items()}
    summary = {
        "split": {
            "chunk1": {k: v.class_counts() for k, v in p1.items()},
            "chunk2": {k: v.class_counts() for k, v in p2.items()},
        }
    }
    if smote_ratio is not None:
        for c, parts in enumerate((p1, p2), start=1):
            for i, name in enumerate(sorted(parts)):
                if name in smote_parts:
                    parts[name] = datapipe.smote(parts[name], smote_ratio, smote_k, seed=seed + 10 * c + i)
        summary["resampled"] = {
            "chunk1": {k: v.class_counts() for k, v in p1.items()},
            "chunk2": {k: v.class_counts() for k, v in p2.items()},
        }
    return PreparedChunks(p1, p2, rec, summary)


def prepare_dataset(
    ds: Dataset,
    seed: int = 0,
    boundary: float = 86_400.0,
    time_column: str = "Time",
    dedup: bool = True,
    dedup_include_aux: bool = True,
    **chunk_kwargs,
) -> PreparedChunks:
    """Full pipeline for one raw dataset: dedup, time chunking, then ``prepare_chunks``."""
    summary = {"loaded": ds.class_counts()}
    if dedup:
        ds, removed = datapipe.dedup(ds, include_aux=dedup_include_aux)
        summary["duplicates_removed"] = removed
        summary["after_dedup"] = ds.class_counts()
    c1, c2 = datapipe.chunk_by_time(ds, boundary=boundary, time_column=time_column)
    summary["chunks"] = {"chunk1": c1.class_counts(), "chunk2": c2.class_counts()}
    prep = prepare_chunks(c1, c2, seed=seed, **chunk_kwargs)
    prep.summary = {**summary, **prep.summary}
    return prep


def score(net, data: Dataset, wall_time: float = 0.0) -> evalkit.MetricsReport:
    p = traincore.predict(net, data.X)
    return evalkit.metrics(evalkit.confusion(p, data.y), wall_time=wall_time)


@dataclass
class FourModelRun:
    reports: dict  # model name -> MetricsReport
    models: dict  # model name -> NetworkGraph
    traces: list  # growth traces of the final model


def four_models(prep: PreparedChunks, cfg: GrowthConfig) -> FourModelRun:
    """Train and score the four models for one seed (``cfg.train_cfg.seed``).

    Reported wall times cover chunk-2 training only for refit and final
    (the work each does when chunk 2 arrives).
    """
    c1, c2 = prep.chunk1, prep.chunk2
    t0 = time.perf_counter()
    init1, _ = growth.train_initial(c1["train"], cfg)
    t_init1 = time.perf_counter() - t0

    t0 = time.perf_counter()
    init2, _ = growth.train_initial(c2["train"], cfg)
    t_init2 = time.perf_counter() - t0

    t0 = time.perf_counter()
    refitted, _ = growth.refit(init1, c2["train"], cfg)
    t_refit = time.perf_counter() - t0

    t0 = time.perf_counter()
    final, traces, _ = growth.ifl_transfer(c1["train"], c2["train"], c2["valid"], cfg, initial_model=init1)
    t_final = time.perf_counter() - t0

    reports = {
        "initial@c1": score(init1, c1["test"], t_init1),
        "initial@c2": score(init2, c2["test"], t_init2),
        "refit@c2": score(refitted, c2["test"], t_refit),
        "final@c2": score(final, c2["test"], t_final),
    }
    models = {"initial@c1": init1, "initial@c2": init2, "refit@c2": refitted, "final@c2": final}
    return FourModelRun(reports, models, traces)


def four_model_comparison(prep: PreparedChunks, cfg: GrowthConfig, seeds) -> tuple[evalkit.Comparison, dict]:
    """Average the four models over ``seeds`` and tabulate them."""
    per_model: dict = {name: [] for name in MODEL_NAMES}
    for s in seeds:
        run = four_models(prep, cfg.with_(train_cfg=cfg.train_cfg.with_(seed=int(s))))
        for name in MODEL_NAMES:
            per_model[name].append(run.reports[name])
    averaged = {name: evalkit.average(reps) for name, reps in per_model.items()}
    table = evalkit.compare_report([(name, averaged[name]) for name in MODEL_NAMES])
    return table, averaged


def mean_metric(reports, name: str) -> float:
    return float(np.mean([getattr(r, name) for r in reports]))
