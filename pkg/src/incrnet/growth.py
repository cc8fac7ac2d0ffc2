"""Constructive growth procedures.

``grow_until_no_convergence`` is the shared inner loop: train whatever is
trainable, compare the criterion metric with the last accepted value, and
either stop or add one hidden unit (freezing everything except that unit
and the output unit). ``ifl_feature_groups`` and ``ifl_transfer`` build
sub-networks around it.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from . import netgraph as ng
from .netgraph import InitPolicy, InputRef, NetworkGraph
from .traincore import TrainConfig, as_xy, converged, train

Observer = Callable[[str, NetworkGraph], None]


@dataclass(frozen=True)
class GrowthConfig:
    train_cfg: TrainConfig = field(default_factory=TrainConfig)
    initial_units_per_subnet: int = 2
    max_units_per_subnet: int = 256
    hidden_init: InitPolicy = ng.GAUSSIAN
    output_init: InitPolicy = ng.ZEROS
    hidden_activation: str = "relu"
    # topology and init of the network trained on the first chunk
    initial_widths: tuple = (500, 10)
    initial_init: InitPolicy = ng.XAVIER

    def __post_init__(self):
        if self.initial_units_per_subnet < 1:
            raise ValueError("initial_units_per_subnet must be >= 1")
        if self.max_units_per_subnet < self.initial_units_per_subnet:
            raise ValueError("max_units_per_subnet must be >= initial_units_per_subnet")

    def with_(self, **changes) -> "GrowthConfig":
        return replace(self, **changes)


@dataclass
class GrowthStep:
    units_total: int
    metric_before: float | None  # last accepted value; None for the first training
    metric_after: float
    epochs: int
    wall_time: float
    accepted: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class GrowthTrace:
    phase: str = ""
    criterion: str = "validation_accuracy"
    threshold: float = 0.01
    steps: list = field(default_factory=list)
    stop_reason: str | None = None  # threshold | unit_cap

    @property
    def comparisons(self) -> list:
        return [s for s in self.steps if s.metric_before is not None]

    @property
    def accepted_metrics(self) -> list:
        return [s.metric_after for s in self.steps if s.accepted]

    @property
    def final_units(self) -> int:
        accepted = [s for s in self.steps if s.accepted]
        return accepted[-1].units_total if accepted else 0

    @property
    def wall_time(self) -> float:
        return sum(s.wall_time for s in self.steps)

    def to_dict(self) -> dict:
        return {
            "phase": self.phase,
            "criterion": self.criterion,
            "threshold": self.threshold,
            "stop_reason": self.stop_reason,
            "final_units": self.final_units,
            "steps": [s.to_dict() for s in self.steps],
        }


@dataclass
class TransferState:
    initial_model: NetworkGraph
    headless_model: NetworkGraph
    t_subset: np.ndarray  # transformed features of train chunk 2
    t_labels: np.ndarray


def _init_rng(cfg: GrowthConfig, salt: int) -> np.random.Generator:
    return np.random.default_rng([cfg.train_cfg.seed, salt])


def _notify(observer: Observer | None, event: str, net: NetworkGraph) -> None:
    if observer is not None:
        observer(event, net)


def fresh_subnet(input_width: int, cfg: GrowthConfig, input_columns=None) -> NetworkGraph:
    """Input -> ``initial_units_per_subnet`` hidden units -> one output."""
    return ng.new_network(
        input_width,
        [cfg.initial_units_per_subnet],
        cfg.hidden_activation,
        init=cfg.hidden_init,
        seed=cfg.train_cfg.seed,
        input_columns=input_columns,
    )


def add_hidden_unit(net: NetworkGraph, sources, cfg: GrowthConfig = GrowthConfig(), rng=None) -> int:
    """Add one single-unit block wired to ``sources`` and to the output unit.

    Afterwards only the new unit and the output unit are trainable.
    """
    bid = ng.add_unit_block(
        net, 1, sources, cfg.hidden_activation, hidden_init=cfg.hidden_init, output_init=cfg.output_init, rng=rng
    )
    ng.set_trainable(net, "new_and_output")
    return bid


def grow_until_no_convergence(
    net: NetworkGraph,
    train_data,
    valid_data=None,
    cfg: GrowthConfig = GrowthConfig(),
    sources=None,
    units: int | None = None,
    phase: str = "",
    observer: Observer | None = None,
    rng=None,
) -> tuple[NetworkGraph, GrowthTrace]:
    """Grow ``net`` one hidden unit at a time until the metric stalls.

    ``sources`` feed every added unit; by default those of the newest block.
    ``units`` is how many units the sub-network being grown already has
    (default: the newest block's width). When a new unit fails to improve
    the metric by the threshold, the network is restored to its state
    before that unit was added.

    ``observer(event, net)`` is called with ``"before_train"`` and
    ``"after_train"`` around every training call.
    """
    tcfg = cfg.train_cfg
    if not any(blk.trainable for blk in net.blocks):
        raise ValueError("growth needs at least one trainable block")
    if sources is None:
        sources = list(net.blocks[-1].sources)
    if units is None:
        units = net.blocks[-1].n_units
    if rng is None:
        rng = _init_rng(cfg, 1)
    trace = GrowthTrace(phase=phase, criterion=tcfg.criterion, threshold=tcfg.threshold)

    previous: float | None = None
    snapshot: NetworkGraph | None = None
    while True:
        _notify(observer, "before_train", net)
        result = train(net, train_data, valid_data, tcfg)
        _notify(observer, "after_train", net)
        current = result.final_metric
        accepted = previous is None or converged(previous, current, tcfg.threshold, tcfg.criterion)
        trace.steps.append(
            GrowthStep(units, previous, current, result.epochs_run, result.wall_time, accepted)
        )
        if not accepted:
            trace.stop_reason = "threshold"
            net = snapshot
            break
        previous = current
        if units >= cfg.max_units_per_subnet:
            trace.stop_reason = "unit_cap"
            break
        snapshot = net.copy()
        add_hidden_unit(net, sources, cfg, rng=rng)
        units += 1
    return net, trace


def _check_groups(groups: Sequence[Sequence[int]], width: int) -> list[tuple[int, ...]]:
    seen: set[int] = set()
    out = []
    for g in groups:
        g = tuple(int(i) for i in g)
        if not g:
            raise ValueError("empty feature group")
        if any(i < 0 or i >= width for i in g):
            raise ValueError(f"feature group {g} out of range for {width} features")
        if seen & set(g) or len(set(g)) != len(g):
            raise ValueError(f"feature groups overlap at {sorted(seen & set(g)) or g}")
        seen.update(g)
        out.append(g)
    if not out:
        raise ValueError("need at least one feature group")
    return out


def ifl_feature_groups(
    train_data,
    valid_data,
    plan,
    cfg: GrowthConfig = GrowthConfig(),
    observer: Observer | None = None,
) -> tuple[NetworkGraph, list[GrowthTrace]]:
    """Incremental feature learning over an ordered list of feature groups.

    ``plan`` is a GroupPlan or a plain list of index lists. The network's
    input layer always holds every feature; sub-network ``i`` reads the
    features of groups ``1..i``.
    """
    X, _ = as_xy(train_data)
    groups = plan.groups if hasattr(plan, "groups") else plan
    groups = _check_groups([getattr(g, "indices", g) for g in groups], X.shape[1])
    rng = _init_rng(cfg, 1)
    traces = []
    seen: list[int] = sorted(groups[0])
    net = fresh_subnet(X.shape[1], cfg, input_columns=seen)
    sources = list(net.blocks[-1].sources)
    net, tr = grow_until_no_convergence(
        net, train_data, valid_data, cfg, sources=sources, phase="group 1", observer=observer, rng=rng
    )
    traces.append(tr)
    for i, g in enumerate(groups[1:], start=2):
        seen = sorted(set(seen) | set(g))
        sources = [InputRef(tuple(seen))]
        ng.add_unit_block(
            net,
            cfg.initial_units_per_subnet,
            sources,
            cfg.hidden_activation,
            hidden_init=cfg.hidden_init,
            output_init=cfg.output_init,
            rng=rng,
        )
        ng.set_trainable(net, "new_and_output")
        net, tr = grow_until_no_convergence(
            net, train_data, valid_data, cfg, sources=sources, phase=f"group {i}", observer=observer, rng=rng
        )
        traces.append(tr)
    return net, traces


def train_initial(train_chunk, cfg: GrowthConfig = GrowthConfig(), observer: Observer | None = None):
    """Build the fixed-topology initial network and train all of it."""
    X, _ = as_xy(train_chunk)
    if X.shape[0] == 0:
        raise ValueError("empty training chunk")
    net = ng.new_network(
        X.shape[1], list(cfg.initial_widths), cfg.hidden_activation, init=cfg.initial_init, seed=cfg.train_cfg.seed
    )
    _notify(observer, "before_train", net)
    result = train(net, train_chunk, None, cfg.train_cfg.with_(criterion="train_loss"))
    _notify(observer, "after_train", net)
    return net, result


def refit(initial_model: NetworkGraph, train_chunk2, cfg: GrowthConfig = GrowthConfig(), valid_data=None):
    """Continue training every weight of a copy of ``initial_model``.

    Without validation data the training-loss criterion drives early
    stopping. Returns ``(model, TrainResult)``.
    """
    X, _ = as_xy(train_chunk2)
    if X.shape[0] == 0:
        raise ValueError("empty training chunk")
    if X.shape[1] != initial_model.input_width:
        raise ValueError(f"chunk width {X.shape[1]} != model input width {initial_model.input_width}")
    model = initial_model.copy()
    ng.set_trainable(model, "all", True)
    tcfg = cfg.train_cfg if valid_data is not None else cfg.train_cfg.with_(criterion="train_loss")
    result = train(model, train_chunk2, valid_data, tcfg)
    return model, result


def ifl_transfer(
    train_chunk1,
    train_chunk2,
    valid_chunk2,
    cfg: GrowthConfig = GrowthConfig(),
    observer: Observer | None = None,
    initial_model: NetworkGraph | None = None,
):
    """Transfer learning from chunk 1 followed by incremental growth on chunk 2.

    Steps: train the initial network on chunk 1 (unless ``initial_model`` is
    given); drop its output unit; feed chunk 2 through the headless network
    to get the transformed features; grow a sub-network on those features
    behind a fresh output unit; then grow a second sub-network on the raw
    inputs, connected to the same output unit.

    Returns ``(model, [trace1, trace2], TransferState)``.
    """
    X1, _ = as_xy(train_chunk1)
    X2, y2 = as_xy(train_chunk2)
    Xv, _ = as_xy(valid_chunk2)
    if min(X1.shape[0], X2.shape[0], Xv.shape[0]) == 0:
        raise ValueError("chunks must be non-empty")
    if not X1.shape[1] == X2.shape[1] == Xv.shape[1]:
        raise ValueError(f"chunk widths differ: {X1.shape[1]}, {X2.shape[1]}, {Xv.shape[1]}")

    if initial_model is None:
        initial_model, _ = train_initial(train_chunk1, cfg, observer)
    elif initial_model.input_width != X1.shape[1]:
        raise ValueError("initial model width does not match the chunks")

    net = initial_model.copy()
    ng.set_trainable(net, "all", False)
    ng.remove_output_unit(net)
    headless = net.copy()
    t_subset = ng.forward(headless, X2)
    state = TransferState(initial_model, headless, t_subset, y2.copy())

    rng = _init_rng(cfg, 2)
    transformed = list(net.head)
    # sub-network on the transformed features, fresh output unit
    ng.add_unit_block(
        net, cfg.initial_units_per_subnet, transformed, cfg.hidden_activation,
        hidden_init=cfg.hidden_init, rng=rng, connect_output=False,
    )
    ng.reconnect_output(net, [net.blocks[-1].id], init=cfg.output_init, rng=rng)
    ng.set_trainable(net, "new_and_output")
    net, tr1 = grow_until_no_convergence(
        net, train_chunk2, valid_chunk2, cfg, sources=transformed, phase="transformed features",
        observer=observer, rng=rng,
    )
    # sub-network on the original inputs, same output unit
    raw = [InputRef()]
    ng.add_unit_block(
        net, cfg.initial_units_per_subnet, raw, cfg.hidden_activation,
        hidden_init=cfg.hidden_init, output_init=cfg.output_init, rng=rng,
    )
    ng.set_trainable(net, "new_and_output")
    net, tr2 = grow_until_no_convergence(
        net, train_chunk2, valid_chunk2, cfg, sources=raw, phase="input features", observer=observer, rng=rng
    )
    return net, [tr1, tr2], state
