"""Command-line interface.

Every command reads one JSON config (``--config`` or the ``INCRNET_CONFIG``
environment variable), applies flag overrides, writes the effective config
next to its outputs and then does its work. Exit codes: 0 success, 2 input
error, 3 data or file-format error, 4 contract violation during training.
"""

from __future__ import annotations

import argparse
import copy
import json
import logging
import os
import sys
from pathlib import Path

import jsonschema

from . import datapipe, evalkit, experiment, growth, netgraph, numerics, synthetic, traincore
from .growth import GrowthConfig
from .netgraph import InitPolicy
from .traincore import TrainConfig

log = logging.getLogger("incrnet")

CONFIG_ENV = "INCRNET_CONFIG"
EXIT_OK, EXIT_INPUT, EXIT_DATA, EXIT_CONTRACT = 0, 2, 3, 4

PART_NAMES = {1: ("train", "test"), 2: ("train", "valid", "test")}

DEFAULT_CONFIG = {
    "data": {
        "source": "csv",  # csv | fraud_fixture | drift_fixture
        "csv": None,
        "label_column": "Class",
        "drop_columns": ["Time"],
        "time_column": "Time",
        "chunk_boundary": 86400.0,
        "dedup": True,
        "dedup_include_aux": True,
        "drift": {"n_per_chunk": 10000, "degrees": 30.0, "seed": 0, "positive_rate": 0.01, "label_noise": 0.0},
    },
    "split": {
        "chunk1": {"train": 0.7, "test": 0.3},
        "chunk2": {"train": 0.7, "valid": 0.15, "test": 0.15},
        "stratified": True,
    },
    "smote": {"ratio": 0.33, "k": 5, "parts": ["train", "valid", "test"]},
    "normalize": {"lo": -5.0, "hi": 5.0},
    "groups": {"k": 3, "order": "descending", "method": "correlation"},
    "network": {
        "initial_widths": [500, 10],
        "initial_init": {"kind": "xavier"},
        "hidden_init": {"kind": "gaussian", "std": 0.01},
        "output_init": {"kind": "zeros"},
        "hidden_activation": "relu",
        "initial_units_per_subnet": 2,
        "max_units_per_subnet": 256,
    },
    "train": {
        "learning_rate": 0.001,
        "batch_size": 1024,
        "max_epochs": 100,
        "patience": 10,
        "threshold": 0.01,
        "criterion": "validation_accuracy",
        "optimizer": "adam",
        "momentum": 0.0,
        "loss": "bce",
        "restore_best": False,
    },
    "seed": 0,
    "n_runs": 1,
    "seeds": None,
    "prepared_dir": "prepared",
    "out_dir": "runs",
}

_NUM = {"type": "number"}
_POS_INT = {"type": "integer", "minimum": 1}
_INIT = {
    "type": "object",
    "properties": {"kind": {"enum": ["gaussian", "xavier", "zeros"]}, "std": {"type": "number", "exclusiveMinimum": 0}},
    "required": ["kind"],
    "additionalProperties": False,
}
_FRACTIONS = {"type": "object", "additionalProperties": {"type": "number", "minimum": 0, "maximum": 1}, "minProperties": 1}


def _obj(props: dict, **extra) -> dict:
    return {"type": "object", "properties": props, "additionalProperties": False, **extra}


CONFIG_SCHEMA = _obj(
    {
        "data": _obj(
            {
                "source": {"enum": ["csv", "fraud_fixture", "drift_fixture"]},
                "csv": {"type": ["string", "null"]},
                "label_column": {"type": "string"},
                "drop_columns": {"type": "array", "items": {"type": "string"}},
                "time_column": {"type": "string"},
                "chunk_boundary": _NUM,
                "dedup": {"type": "boolean"},
                "dedup_include_aux": {"type": "boolean"},
                "drift": _obj(
                    {
                        "n_per_chunk": _POS_INT,
                        "degrees": _NUM,
                        "seed": {"type": "integer"},
                        "positive_rate": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                        "label_noise": {"type": "number", "minimum": 0, "maximum": 1},
                    }
                ),
            }
        ),
        "split": _obj({"chunk1": _FRACTIONS, "chunk2": _FRACTIONS, "stratified": {"type": "boolean"}}),
        "smote": _obj(
            {
                "ratio": {"type": ["number", "null"], "exclusiveMinimum": 0},
                "k": _POS_INT,
                "parts": {"type": "array", "items": {"enum": ["train", "valid", "test"]}},
            }
        ),
        "normalize": _obj({"lo": _NUM, "hi": _NUM}),
        "groups": _obj(
            {
                "k": _POS_INT,
                "order": {"enum": ["descending", "ascending", "none"]},
                "method": {"enum": ["correlation", "mutual_information"]},
            }
        ),
        "network": _obj(
            {
                "initial_widths": {"type": "array", "items": _POS_INT, "minItems": 1},
                "initial_init": _INIT,
                "hidden_init": _INIT,
                "output_init": _INIT,
                "hidden_activation": {"enum": list(numerics.ACTIVATIONS)},
                "initial_units_per_subnet": _POS_INT,
                "max_units_per_subnet": _POS_INT,
            }
        ),
        "train": _obj(
            {
                "learning_rate": {"type": "number", "exclusiveMinimum": 0},
                "batch_size": _POS_INT,
                "max_epochs": {"type": "integer", "minimum": 0},
                "patience": _POS_INT,
                "threshold": {"type": "number", "minimum": 0},
                "criterion": {"enum": list(traincore.CRITERIA)},
                "optimizer": {"enum": list(traincore.OPTIMIZERS)},
                "momentum": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
                "loss": {"enum": ["bce", "mse"]},
                "restore_best": {"type": "boolean"},
            }
        ),
        "seed": {"type": "integer", "minimum": 0},
        "n_runs": _POS_INT,
        "seeds": {"type": ["array", "null"], "items": {"type": "integer", "minimum": 0}},
        "prepared_dir": {"type": "string"},
        "out_dir": {"type": "string"},
    }
)


class CliError(Exception):
    def __init__(self, code: int, stage: str, message: str):
        super().__init__(message)
        self.code, self.stage = code, stage


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _set_path(cfg: dict, dotted: str, value) -> None:
    keys = dotted.split(".")
    node = cfg
    for k in keys[:-1]:
        if not isinstance(node.get(k), dict):
            raise CliError(EXIT_INPUT, "config", f"--set {dotted}: {k!r} is not a config section")
        node = node[k]
    node[keys[-1]] = value


def _parse_set(item: str):
    key, sep, raw = item.partition("=")
    if not sep or not key:
        raise CliError(EXIT_INPUT, "config", f"--set expects KEY=VALUE, got {item!r}")
    try:
        return key, json.loads(raw)
    except json.JSONDecodeError:
        return key, raw  # bare strings need no quotes


def load_config(path=None, overrides=(), flags: dict | None = None) -> dict:
    """Defaults, then the config file, then ``--set`` items, then dedicated flags."""
    cfg = copy.deepcopy(DEFAULT_CONFIG)
    path = path or os.environ.get(CONFIG_ENV)
    if path:
        p = Path(path)
        if not p.is_file():
            raise CliError(EXIT_INPUT, "config", f"config file not found: {p}")
        try:
            cfg = _merge(cfg, json.loads(p.read_text()))
        except json.JSONDecodeError as exc:
            raise CliError(EXIT_INPUT, "config", f"{p}: invalid JSON ({exc})") from None
    for item in overrides:
        _set_path(cfg, *_parse_set(item))
    for dotted, value in (flags or {}).items():
        if value is not None:
            _set_path(cfg, dotted, value)
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = ".".join(str(p) for p in exc.absolute_path) or "<root>"
        raise CliError(EXIT_INPUT, "config", f"{where}: {exc.message}") from None
    for part in ("chunk1", "chunk2"):
        total = sum(cfg["split"][part].values())
        if abs(total - 1.0) > 1e-9:
            raise CliError(EXIT_INPUT, "config", f"split.{part} fractions sum to {total}, not 1")
    if cfg["seeds"] is not None and len(cfg["seeds"]) != cfg["n_runs"]:
        raise CliError(EXIT_INPUT, "config", f"{len(cfg['seeds'])} seeds given for n_runs={cfg['n_runs']}")
    return cfg


def run_seeds(cfg: dict) -> list[int]:
    if cfg["seeds"] is not None:
        return list(cfg["seeds"])
    return [cfg["seed"] + i for i in range(cfg["n_runs"])]


def growth_config(cfg: dict, seed: int) -> GrowthConfig:
    net = cfg["network"]
    return GrowthConfig(
        train_cfg=TrainConfig(seed=seed, **cfg["train"]),
        initial_units_per_subnet=net["initial_units_per_subnet"],
        max_units_per_subnet=net["max_units_per_subnet"],
        hidden_init=InitPolicy.from_value(net["hidden_init"]),
        output_init=InitPolicy.from_value(net["output_init"]),
        hidden_activation=net["hidden_activation"],
        initial_widths=tuple(net["initial_widths"]),
        initial_init=InitPolicy.from_value(net["initial_init"]),
    )


def _write_json(path: Path, doc) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
    return path


def _echo_config(cfg: dict, out_dir: Path, command: str) -> None:
    _write_json(out_dir / f"effective_config.{command}.json", cfg)
    log.info("effective config: %s", json.dumps(cfg, sort_keys=True))


# ---------------------------------------------------------------------------
# Prepared data on disk
# ---------------------------------------------------------------------------


def _part_path(prepared: Path, chunk: int, part: str) -> Path:
    return prepared / f"chunk{chunk}_{part}.data.json"


def load_part(prepared: Path, chunk: int, part: str) -> datapipe.Dataset:
    path = _part_path(prepared, chunk, part)
    if not path.is_file():
        raise CliError(EXIT_INPUT, "load", f"prepared file not found: {path} (run 'prepare' first)")
    return datapipe.load_dataset(path)


def _raw_dataset(cfg: dict) -> datapipe.Dataset:
    data = cfg["data"]
    if data["source"] == "fraud_fixture":
        path = Path(cfg["prepared_dir"]) / "fraud_fixture.csv"
        path.parent.mkdir(parents=True, exist_ok=True)
        synthetic.write_fraud_csv(path)
        return datapipe.load_csv(path, data["label_column"], data["drop_columns"])
    if data["csv"] is None:
        raise CliError(EXIT_INPUT, "load", "no input CSV: set data.csv or pass --csv")
    path = Path(data["csv"])
    if not path.is_file():
        raise CliError(EXIT_INPUT, "load", f"input CSV not found: {path}")
    return datapipe.load_csv(path, data["label_column"], data["drop_columns"])


def cmd_prepare(cfg: dict) -> dict:
    data, sm = cfg["data"], cfg["smote"]
    kwargs = dict(
        lo=cfg["normalize"]["lo"],
        hi=cfg["normalize"]["hi"],
        smote_ratio=sm["ratio"],
        smote_k=sm["k"],
        smote_parts=tuple(sm["parts"]),
        split1=list(cfg["split"]["chunk1"].items()),
        split2=list(cfg["split"]["chunk2"].items()),
        stratified=cfg["split"]["stratified"],
    )
    if data["source"] == "drift_fixture":
        c1, c2 = synthetic.drift_chunks(**data["drift"])
        prep = experiment.prepare_chunks(c1, c2, seed=cfg["seed"], **kwargs)
    else:
        ds = _raw_dataset(cfg)
        prep = experiment.prepare_dataset(
            ds,
            seed=cfg["seed"],
            boundary=data["chunk_boundary"],
            time_column=data["time_column"],
            dedup=data["dedup"],
            dedup_include_aux=data["dedup_include_aux"],
            **kwargs,
        )
    out = Path(cfg["prepared_dir"])
    out.mkdir(parents=True, exist_ok=True)
    for chunk, parts in ((1, prep.chunk1), (2, prep.chunk2)):
        for name, ds in parts.items():
            datapipe.save_dataset(ds, _part_path(out, chunk, name))
    _write_json(out / "scaling.json", prep.scaling.to_dict())
    _write_json(out / "summary.json", prep.summary)
    _echo_config(cfg, out, "prepare")
    print(json.dumps(prep.summary, indent=1, sort_keys=True))
    return prep.summary


# ---------------------------------------------------------------------------
# Training commands
# ---------------------------------------------------------------------------


def _run_files(out: Path, name: str, seed: int) -> dict:
    stem = f"{name}.seed{seed}"
    return {
        "model": out / f"{stem}{netgraph.MODEL_SUFFIX}",
        "trace": out / f"{stem}.trace.json",
        "metrics": out / f"{stem}.metrics.json",
        "history": out / f"{stem}.history.csv",
    }


def _training_trace(phase: str, result: traincore.TrainResult) -> dict:
    return {
        "phase": phase,
        "epochs_run": result.epochs_run,
        "stopped_by": result.stopped_by,
        "final_metric": result.final_metric,
        "metric_history": list(result.metric_history),
        "wall_time": result.wall_time,
    }


def _finish_run(files: dict, name: str, net, test: datapipe.Dataset, trace_doc: dict, history, metric: str, wall: float):
    netgraph.save_model(net, files["model"])
    _write_json(files["trace"], trace_doc)
    evalkit.write_history_csv(files["history"], history, metric)
    report = experiment.score(net, test, wall)
    evalkit.save_report(report, files["metrics"], name)
    return report


def _summarise(cfg: dict, out: Path, name: str, reports: list) -> evalkit.MetricsReport:
    avg = evalkit.average(reports)
    evalkit.save_report(avg, out / f"{name}.metrics.json", name)
    print(f"{name}: " + "  ".join(f"{k}={v:.4f}" for k, v in avg.values().items() if k != "wall_time"))
    return avg


def cmd_train_initial(cfg: dict, chunk: int = 1) -> evalkit.MetricsReport:
    prepared, out = Path(cfg["prepared_dir"]), Path(cfg["out_dir"])
    train_ds, test_ds = load_part(prepared, chunk, "train"), load_part(prepared, chunk, "test")
    name = f"initial_c{chunk}"
    _echo_config(cfg, out, "train-initial")
    reports = []
    for seed in run_seeds(cfg):
        gcfg = growth_config(cfg, seed)
        net, result = growth.train_initial(train_ds, gcfg)
        files = _run_files(out, name, seed)
        reports.append(
            _finish_run(files, name, net, test_ds, _training_trace("initial", result),
                        result.metric_history, "train_loss", result.wall_time)
        )
    return _summarise(cfg, out, name, reports)


def _initial_model_for(out: Path, seed: int, model_path) -> Path:
    path = Path(model_path) if model_path else _run_files(out, "initial_c1", seed)["model"]
    if not path.is_file():
        raise CliError(EXIT_INPUT, "load", f"initial model not found: {path} (run 'train-initial' first or pass --model)")
    return path


def cmd_refit(cfg: dict, model_path=None) -> evalkit.MetricsReport:
    prepared, out = Path(cfg["prepared_dir"]), Path(cfg["out_dir"])
    train_ds, test_ds = load_part(prepared, 2, "train"), load_part(prepared, 2, "test")
    _echo_config(cfg, out, "refit")
    reports = []
    for seed in run_seeds(cfg):
        initial = netgraph.load_model(_initial_model_for(out, seed, model_path))
        net, result = growth.refit(initial, train_ds, growth_config(cfg, seed))
        files = _run_files(out, "refit_c2", seed)
        reports.append(
            _finish_run(files, "refit_c2", net, test_ds, _training_trace("refit", result),
                        result.metric_history, "train_loss", result.wall_time)
        )
    return _summarise(cfg, out, "refit_c2", reports)


def _growth_trace_doc(traces, net, valid: datapipe.Dataset, extra: dict | None = None) -> dict:
    return {
        "phases": [t.to_dict() for t in traces],
        "final_validation_accuracy": traincore.evaluate(net, valid),
        "wall_time": sum(t.wall_time for t in traces),
        **(extra or {}),
    }


def _accepted_history(traces) -> list:
    return [m for t in traces for m in t.accepted_metrics]


def cmd_grow_groups(cfg: dict) -> evalkit.MetricsReport:
    prepared, out = Path(cfg["prepared_dir"]), Path(cfg["out_dir"])
    train_ds = load_part(prepared, 2, "train")
    valid_ds, test_ds = load_part(prepared, 2, "valid"), load_part(prepared, 2, "test")
    g = cfg["groups"]
    if g["k"] > train_ds.d:
        raise CliError(EXIT_INPUT, "config", f"groups.k={g['k']} exceeds the {train_ds.d} features")
    plan = datapipe.make_groups(datapipe.relevancy_scores(train_ds, g["method"]), g["k"], g["order"])
    name = f"groups_{g['order']}"
    _echo_config(cfg, out, f"grow-groups.{g['order']}")
    reports = []
    for seed in run_seeds(cfg):
        net, traces = growth.ifl_feature_groups(train_ds, valid_ds, plan, growth_config(cfg, seed))
        doc = _growth_trace_doc(traces, net, valid_ds, {"plan": plan.to_dict()})
        reports.append(
            _finish_run(_run_files(out, name, seed), name, net, test_ds, doc,
                        _accepted_history(traces), "validation_accuracy", doc["wall_time"])
        )
    return _summarise(cfg, out, name, reports)


def cmd_grow_transfer(cfg: dict, model_path=None) -> evalkit.MetricsReport:
    prepared, out = Path(cfg["prepared_dir"]), Path(cfg["out_dir"])
    train1 = load_part(prepared, 1, "train")
    train2, valid2, test2 = (load_part(prepared, 2, p) for p in PART_NAMES[2])
    _echo_config(cfg, out, "grow-transfer")
    reports = []
    for seed in run_seeds(cfg):
        gcfg = growth_config(cfg, seed)
        default_path = _run_files(out, "initial_c1", seed)["model"]
        if model_path or default_path.is_file():
            initial = netgraph.load_model(_initial_model_for(out, seed, model_path))
        else:
            log.info("no initial model for seed %d; training one on chunk 1", seed)
            initial = None
        net, traces, _ = growth.ifl_transfer(train1, train2, valid2, gcfg, initial_model=initial)
        doc = _growth_trace_doc(traces, net, valid2)
        reports.append(
            _finish_run(_run_files(out, "final_c2", seed), "final_c2", net, test2, doc,
                        _accepted_history(traces), "validation_accuracy", doc["wall_time"])
        )
    return _summarise(cfg, out, "final_c2", reports)


def cmd_evaluate(cfg: dict, model_path, data_path, report_path=None) -> evalkit.MetricsReport:
    for p in (model_path, data_path):
        if not Path(p).is_file():
            raise CliError(EXIT_INPUT, "load", f"file not found: {p}")
    net = netgraph.load_model(model_path)
    ds = datapipe.load_dataset(data_path)
    report = experiment.score(net, ds)
    name = Path(model_path).name.removesuffix(netgraph.MODEL_SUFFIX)
    path = Path(report_path) if report_path else Path(cfg["out_dir"]) / f"{name}.eval.metrics.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    evalkit.save_report(report, path, name)
    print(f"{name}: " + "  ".join(f"{k}={v:.4f}" for k, v in report.values().items() if k != "wall_time"))
    return report


def cmd_compare(cfg: dict, report_paths, output=None) -> evalkit.Comparison:
    if len(report_paths) < 2:
        raise CliError(EXIT_INPUT, "compare", "need at least two report files")
    models = []
    for p in report_paths:
        if not Path(p).is_file():
            raise CliError(EXIT_INPUT, "compare", f"report file not found: {p}")
        models.append(evalkit.load_report(p))
    table = evalkit.compare_report(models)
    print(table.to_text())
    path = Path(output) if output else Path(cfg["out_dir"]) / "comparison.json"
    _write_json(path, table.to_dict())
    return table


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help=f"JSON config file (default: ${CONFIG_ENV})")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config value, e.g. train.max_epochs=5 (value parsed as JSON)")
    common.add_argument("--prepared", dest="prepared_dir", help="directory of prepared chunk files")
    common.add_argument("--out", dest="out_dir", help="output directory")
    common.add_argument("--seed", type=int, help="base seed")
    common.add_argument("--n-runs", type=int, help="number of seeded runs")
    common.add_argument("--max-epochs", type=int, help="epoch budget per training call")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="incrnet", description="Constructive networks for incremental learning.")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("prepare", parents=[common], help="load, dedup, chunk, split, rescale and resample data")
    p.add_argument("--csv", help="input CSV (sets data.source=csv)")
    p.add_argument("--fixture", choices=["fraud", "drift"], help="use a built-in synthetic dataset instead of a CSV")
    p = sub.add_parser("train-initial", parents=[common], help="train the fixed-topology initial network")
    p.add_argument("--chunk", type=int, choices=[1, 2], default=1, help="chunk to train and test on")
    p = sub.add_parser("refit", parents=[common], help="retrain every weight of the initial model on chunk 2")
    p.add_argument("--model", help="initial model (default: <out>/initial_c1.seed<N>.cnet.json)")
    p = sub.add_parser("grow-groups", parents=[common], help="incremental feature learning over feature groups")
    p.add_argument("--order", choices=["descending", "ascending", "none"])
    p.add_argument("--groups", type=int, help="number of feature groups")
    p = sub.add_parser("grow-transfer", parents=[common], help="transfer from chunk 1, then grow on chunk 2")
    p.add_argument("--model", help="initial model (default: <out>/initial_c1.seed<N>.cnet.json, trained if absent)")
    p = sub.add_parser("evaluate", parents=[common], help="score a model on a prepared dataset file")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--report", help="metrics file to write")
    p = sub.add_parser("compare", parents=[common], help="tabulate two or more metrics reports")
    p.add_argument("reports", nargs="+")
    p.add_argument("--output", help="comparison file (default: <out>/comparison.json)")
    return parser


def _flag_overrides(args) -> dict:
    flags = {
        "prepared_dir": args.prepared_dir,
        "out_dir": args.out_dir,
        "seed": args.seed,
        "n_runs": args.n_runs,
        "train.max_epochs": args.max_epochs,
    }
    if args.command == "prepare":
        if args.csv:
            flags.update({"data.source": "csv", "data.csv": args.csv})
        if args.fixture:
            flags["data.source"] = f"{args.fixture}_fixture"
    if args.command == "grow-groups":
        flags.update({"groups.order": args.order, "groups.k": args.groups})
    return flags


def _dispatch(args, cfg: dict):
    if args.command == "prepare":
        return cmd_prepare(cfg)
    if args.command == "train-initial":
        return cmd_train_initial(cfg, args.chunk)
    if args.command == "refit":
        return cmd_refit(cfg, args.model)
    if args.command == "grow-groups":
        return cmd_grow_groups(cfg)
    if args.command == "grow-transfer":
        return cmd_grow_transfer(cfg, args.model)
    if args.command == "evaluate":
        return cmd_evaluate(cfg, args.model, args.data, args.report)
    return cmd_compare(cfg, args.reports, args.output)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    stage = args.command
    try:
        cfg = load_config(args.config, args.set, _flag_overrides(args))
        _dispatch(args, cfg)
    except CliError as exc:
        print(f"incrnet {stage}: {exc.stage}: {exc}", file=sys.stderr)
        return exc.code
    except FileNotFoundError as exc:
        print(f"incrnet {stage}: input: file not found: {exc.filename}", file=sys.stderr)
        return EXIT_INPUT
    except (datapipe.DataError, netgraph.ModelFormatError, evalkit.ReportFormatError) as exc:
        print(f"incrnet {stage}: data: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ValueError, RuntimeError) as exc:
        print(f"incrnet {stage}: training: {exc}", file=sys.stderr)
        return EXIT_CONTRACT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
