"""Growable feed-forward network built from dense unit blocks.

A network has an input layer, an ordered list of blocks and (normally) a
single output unit. Each block reads from the input layer (optionally a
subset of its columns) and/or earlier blocks. The output unit reads the
concatenation of the blocks it is connected to; the concatenation itself
has no parameters.
"""

from __future__ import annotations

import base64
import copy
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np

from .numerics import activation_forward, affine_forward, _check_activation

FORMAT_NAME = "incrnet.cnet"
FORMAT_VERSION = 1
MODEL_SUFFIX = ".cnet.json"


class ModelFormatError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Topology types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InputRef:
    """Reference to the input layer; ``columns=None`` means every column."""

    columns: tuple[int, ...] | None = None


Source = Union[InputRef, int]


@dataclass(frozen=True)
class InitPolicy:
    kind: str = "gaussian"  # gaussian | xavier | zeros
    std: float = 0.01

    def __post_init__(self):
        if self.kind not in ("gaussian", "xavier", "zeros"):
            raise ValueError(f"unknown init policy {self.kind!r}")
        if self.kind == "gaussian" and not self.std > 0:
            raise ValueError("gaussian init needs std > 0")

    def sample(self, rng: np.random.Generator, n_out: int, n_in: int) -> np.ndarray:
        if self.kind == "zeros":
            return np.zeros((n_out, n_in))
        if self.kind == "gaussian":
            return rng.normal(0.0, self.std, size=(n_out, n_in))
        bound = np.sqrt(6.0 / (n_in + n_out))
        return rng.uniform(-bound, bound, size=(n_out, n_in))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "std": self.std}

    @classmethod
    def from_value(cls, value) -> "InitPolicy":
        if isinstance(value, InitPolicy):
            return value
        if isinstance(value, str):
            return cls(kind=value)
        return cls(**value)


GAUSSIAN = InitPolicy("gaussian", 0.01)
XAVIER = InitPolicy("xavier")
ZEROS = InitPolicy("zeros")


@dataclass
class UnitBlock:
    id: int
    sources: list
    W: np.ndarray
    b: np.ndarray
    activation: str = "relu"
    trainable: bool = True

    @property
    def n_units(self) -> int:
        return self.W.shape[0]

    @property
    def n_params(self) -> int:
        return self.W.size + self.b.size


@dataclass
class OutputUnit:
    sources: list  # block ids, concatenated in this order
    w: np.ndarray
    b: np.ndarray = field(default_factory=lambda: np.zeros(1))  # shape (1,)
    activation: str = "sigmoid"
    trainable: bool = True

    @property
    def n_params(self) -> int:
        return self.w.size + 1


@dataclass
class NetworkGraph:
    input_width: int
    blocks: list = field(default_factory=list)
    output: OutputUnit | None = None
    next_block_id: int = 0
    # blocks whose activations a headless network emits
    head: list = field(default_factory=list)

    def block(self, block_id: int) -> UnitBlock:
        for blk in self.blocks:
            if blk.id == block_id:
                return blk
        raise KeyError(f"no block with id {block_id}")

    def has_block(self, block_id: int) -> bool:
        return any(blk.id == block_id for blk in self.blocks)

    def width_of(self, source: Source) -> int:
        if isinstance(source, InputRef):
            return self.input_width if source.columns is None else len(source.columns)
        return self.block(source).n_units

    def source_width(self, sources: Iterable[Source]) -> int:
        return sum(self.width_of(s) for s in sources)

    def copy(self) -> "NetworkGraph":
        return copy.deepcopy(self)

    @property
    def output_width(self) -> int:
        if self.output is not None:
            return 1
        return sum(self.block(b).n_units for b in self.head)

    # parameter views, in a fixed canonical order
    def parameters(self, trainable_only: bool = False) -> list[np.ndarray]:
        params = []
        for blk in self.blocks:
            if blk.trainable or not trainable_only:
                params += [blk.W, blk.b]
        if self.output is not None and (self.output.trainable or not trainable_only):
            params += [self.output.w, self.output.b]
        return params

    def n_params(self, trainable_only: bool = False) -> int:
        return sum(p.size for p in self.parameters(trainable_only))


def parameter_vector(net: NetworkGraph, trainable_only: bool = False) -> np.ndarray:
    params = net.parameters(trainable_only)
    if not params:
        return np.zeros(0)
    return np.concatenate([p.ravel() for p in params])


def set_parameter_vector(net: NetworkGraph, theta, trainable_only: bool = False) -> None:
    theta = np.asarray(theta, dtype=np.float64)
    if theta.size != net.n_params(trainable_only):
        raise ValueError(f"expected {net.n_params(trainable_only)} parameters, got {theta.size}")
    pos = 0
    for blk in net.blocks:
        if blk.trainable or not trainable_only:
            blk.W[...] = theta[pos:pos + blk.W.size].reshape(blk.W.shape)
            pos += blk.W.size
            blk.b[...] = theta[pos:pos + blk.b.size]
            pos += blk.b.size
    out = net.output
    if out is not None and (out.trainable or not trainable_only):
        out.w[...] = theta[pos:pos + out.w.size]
        pos += out.w.size
        out.b[0] = theta[pos]


# ---------------------------------------------------------------------------
# Construction
# ---------------------------------------------------------------------------


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _normalize_source(net: NetworkGraph, source) -> Source:
    if isinstance(source, InputRef):
        if source.columns is None:
            return source
        cols = tuple(int(c) for c in source.columns)
        if not cols:
            raise ValueError("input reference selects no columns")
        if min(cols) < 0 or max(cols) >= net.input_width or len(set(cols)) != len(cols):
            raise ValueError(f"bad input columns {cols} for input width {net.input_width}")
        if cols == tuple(range(net.input_width)):
            return InputRef()
        return InputRef(cols)
    if source == "input":
        return InputRef()
    if isinstance(source, (int, np.integer)) and not isinstance(source, bool):
        if not net.has_block(int(source)):
            raise ValueError(f"dangling source: block {int(source)} does not exist")
        return int(source)
    raise ValueError(f"cannot interpret source {source!r}")


def new_network(
    input_width: int,
    layer_widths: Sequence[int],
    activations: str | Sequence[str] = "relu",
    init: InitPolicy = GAUSSIAN,
    seed=None,
    output_activation: str = "sigmoid",
    input_columns: Sequence[int] | None = None,
) -> NetworkGraph:
    """Fully connected chain ``input -> layer_widths[0] -> ... -> 1``.

    Every weight, the output unit's included, is drawn from ``init``;
    biases start at zero.
    """
    if input_width < 1:
        raise ValueError("input_width must be >= 1")
    widths = list(layer_widths)
    if not widths or any(w < 1 for w in widths):
        raise ValueError(f"layer widths must be >= 1, got {widths}")
    if isinstance(activations, str):
        activations = [activations] * len(widths)
    if len(activations) != len(widths):
        raise ValueError("need one activation per hidden layer")
    init = InitPolicy.from_value(init)
    rng = _rng(seed)
    net = NetworkGraph(input_width=int(input_width))
    sources = [InputRef(None if input_columns is None else tuple(input_columns))]
    for width, act in zip(widths, activations):
        bid = add_unit_block(net, width, sources, act, hidden_init=init, rng=rng, connect_output=False)
        sources = [bid]
    last = net.blocks[-1]
    net.output = OutputUnit(
        sources=[last.id],
        w=init.sample(rng, 1, last.n_units).ravel(),
        b=np.zeros(1),
        activation=output_activation,
    )
    _check_activation(output_activation)
    return net


def add_unit_block(
    net: NetworkGraph,
    n_units: int,
    sources: Sequence,
    activation: str = "relu",
    hidden_init: InitPolicy = GAUSSIAN,
    output_init: InitPolicy = ZEROS,
    rng=None,
    connect_output: bool = True,
) -> int:
    """Append a block of ``n_units`` hidden units and return its id.

    Incoming weights come from ``hidden_init``, biases are zero. With
    ``connect_output`` the output unit gains ``n_units`` weights drawn from
    ``output_init`` (zeros by default, so predictions do not move).
    Existing parameters are untouched.
    """
    if n_units < 1:
        raise ValueError("a block needs at least one unit")
    _check_activation(activation)
    if not sources:
        raise ValueError("a block needs at least one source")
    srcs = [_normalize_source(net, s) for s in sources]
    if connect_output and net.output is None:
        raise ValueError("cannot connect to the output unit: network has none")
    hidden_init = InitPolicy.from_value(hidden_init)
    output_init = InitPolicy.from_value(output_init)
    rng = _rng(rng)
    fan_in = net.source_width(srcs)
    blk = UnitBlock(
        id=net.next_block_id,
        sources=srcs,
        W=hidden_init.sample(rng, n_units, fan_in),
        b=np.zeros(n_units),
        activation=activation,
        trainable=True,
    )
    net.blocks.append(blk)
    net.next_block_id += 1
    if connect_output:
        out = net.output
        extra = output_init.sample(rng, 1, n_units).ravel()
        out.sources.append(blk.id)
        out.w = np.concatenate([out.w, extra])
    return blk.id


def set_trainable(net: NetworkGraph, selector="all", flag: bool = True) -> None:
    """Update freeze flags.

    ``selector`` is ``"all"`` (blocks and output unit), ``"new_and_output"``
    (only the newest block and the output unit stay trainable; ``flag`` is
    ignored) or a list of block ids, where the string ``"output"`` names the
    output unit.
    """
    if selector == "all":
        for blk in net.blocks:
            blk.trainable = flag
        if net.output is not None:
            net.output.trainable = flag
        return
    if selector == "new_and_output":
        if not net.blocks:
            raise ValueError("network has no blocks")
        for blk in net.blocks:
            blk.trainable = False
        net.blocks[-1].trainable = True
        if net.output is not None:
            net.output.trainable = True
        return
    if isinstance(selector, (str, int)):
        selector = [selector]
    for item in selector:
        if item == "output":
            if net.output is None:
                raise ValueError("network has no output unit")
            continue
        if not net.has_block(item):
            raise KeyError(f"unknown block id {item}")
    for item in selector:
        if item == "output":
            net.output.trainable = flag
        else:
            net.block(item).trainable = flag


def trainable_state(net: NetworkGraph) -> dict:
    state = {blk.id: blk.trainable for blk in net.blocks}
    if net.output is not None:
        state["output"] = net.output.trainable
    return state


def remove_output_unit(net: NetworkGraph) -> OutputUnit:
    """Detach the output unit; the net then emits its last hidden layer."""
    if net.output is None:
        raise ValueError("output unit already removed")
    out = net.output
    net.head = list(out.sources)
    net.output = None
    return out


def reconnect_output(
    net: NetworkGraph,
    sources: Sequence[int],
    init: InitPolicy = ZEROS,
    activation: str = "sigmoid",
    rng=None,
) -> OutputUnit:
    """Attach a fresh output unit over ``sources`` (block ids)."""
    if net.output is not None:
        raise ValueError("network already has an output unit")
    srcs = [_normalize_source(net, s) for s in sources]
    if any(isinstance(s, InputRef) for s in srcs):
        raise ValueError("the output unit connects to blocks only")
    _check_activation(activation)
    init = InitPolicy.from_value(init)
    width = net.source_width(srcs)
    net.output = OutputUnit(
        sources=list(srcs), w=init.sample(_rng(rng), 1, width).ravel(), b=np.zeros(1), activation=activation
    )
    net.head = []
    return net.output


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


def gather(source: Source, x: np.ndarray, acts: dict) -> np.ndarray:
    if isinstance(source, InputRef):
        return x if source.columns is None else x[:, source.columns]
    return acts[source]


def gather_all(sources, x, acts) -> np.ndarray:
    parts = [gather(s, x, acts) for s in sources]
    return parts[0] if len(parts) == 1 else np.concatenate(parts, axis=1)


def output_logit(net: NetworkGraph, acts: dict) -> np.ndarray:
    """Output pre-activation, summed one source block at a time.

    Accumulating per block (rather than one long dot product) keeps the
    rounding of existing terms fixed, so a block joined with zero output
    weights leaves the result bit-identical.
    """
    out = net.output
    z = None
    pos = 0
    for s in out.sources:
        a = acts[s]
        part = a @ out.w[pos:pos + a.shape[1]]
        pos += a.shape[1]
        z = part if z is None else z + part
    return z + out.b[0]


def forward(net: NetworkGraph, x, return_trace: bool = False):
    """Evaluate the network.

    A single sample (1-D ``x``) yields a scalar, a batch yields one value
    per row. A headless network yields its head activations instead. With
    ``return_trace`` the per-block activations are returned as well.
    """
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    X = np.atleast_2d(x)
    if X.shape[1] != net.input_width:
        raise ValueError(f"input width {X.shape[1]} != network input width {net.input_width}")
    if net.output is None and not net.head:
        raise ValueError("network has no output unit (mid-surgery state)")
    acts: dict = {}
    for blk in net.blocks:
        z = affine_forward(blk.W, blk.b, gather_all(blk.sources, X, acts))
        acts[blk.id] = activation_forward(blk.activation, z)
    if net.output is not None:
        z = output_logit(net, acts)
        y = activation_forward(net.output.activation, z)
        result = y[0] if single else y
    else:
        y = gather_all(net.head, X, acts)
        result = y[0] if single else y
    if return_trace:
        return result, acts
    return result


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def encode_array(a: np.ndarray) -> dict:
    a = np.ascontiguousarray(a, dtype="<f8")
    return {"shape": list(a.shape), "data": base64.b64encode(a.tobytes()).decode("ascii")}


def decode_array(d: dict) -> np.ndarray:
    raw = base64.b64decode(d["data"].encode("ascii"), validate=True)
    a = np.frombuffer(raw, dtype="<f8").astype(np.float64)
    return a.reshape(d["shape"])


def _source_to_json(s: Source):
    if isinstance(s, InputRef):
        return {"input": None if s.columns is None else list(s.columns)}
    return {"block": s}


def _source_from_json(d) -> Source:
    if "input" in d:
        return InputRef(None if d["input"] is None else tuple(d["input"]))
    return int(d["block"])


def network_to_dict(net: NetworkGraph) -> dict:
    doc = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "input_width": net.input_width,
        "next_block_id": net.next_block_id,
        "blocks": [
            {
                "id": blk.id,
                "sources": [_source_to_json(s) for s in blk.sources],
                "activation": blk.activation,
                "trainable": blk.trainable,
                "W": encode_array(blk.W),
                "b": encode_array(blk.b),
            }
            for blk in net.blocks
        ],
        "head": list(net.head),
        "output": None,
    }
    if net.output is not None:
        out = net.output
        doc["output"] = {
            "sources": list(out.sources),
            "activation": out.activation,
            "trainable": out.trainable,
            "w": encode_array(out.w),
            "b": encode_array(out.b),
        }
    return doc


def network_from_dict(doc: dict) -> NetworkGraph:
    if not isinstance(doc, dict) or doc.get("format") != FORMAT_NAME:
        raise ModelFormatError(f"not a model file: expected format {FORMAT_NAME!r} version {FORMAT_VERSION}")
    if doc.get("version") != FORMAT_VERSION:
        raise ModelFormatError(
            f"unsupported model format version {doc.get('version')!r}; expected version {FORMAT_VERSION}"
        )
    try:
        net = NetworkGraph(input_width=int(doc["input_width"]), next_block_id=int(doc["next_block_id"]))
        for bd in doc["blocks"]:
            net.blocks.append(
                UnitBlock(
                    id=int(bd["id"]),
                    sources=[_source_from_json(s) for s in bd["sources"]],
                    W=decode_array(bd["W"]),
                    b=decode_array(bd["b"]),
                    activation=bd["activation"],
                    trainable=bool(bd["trainable"]),
                )
            )
        net.head = [int(h) for h in doc.get("head", [])]
        od = doc["output"]
        if od is not None:
            net.output = OutputUnit(
                sources=[int(s) for s in od["sources"]],
                w=decode_array(od["w"]),
                b=decode_array(od["b"]).reshape(1),
                activation=od["activation"],
                trainable=bool(od["trainable"]),
            )
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"corrupt model file (format {FORMAT_NAME} v{FORMAT_VERSION}): {exc}") from exc
    validate_network(net)
    return net


def validate_network(net: NetworkGraph) -> None:
    """Structural checks: topological order, widths, single output/head."""
    seen: dict[int, int] = {}
    for blk in net.blocks:
        if blk.id in seen:
            raise ModelFormatError(f"duplicate block id {blk.id}")
        width = 0
        for s in blk.sources:
            if isinstance(s, InputRef):
                width += net.input_width if s.columns is None else len(s.columns)
            elif s in seen:
                width += seen[s]
            else:
                raise ModelFormatError(f"block {blk.id} reads block {s}, which is not evaluated before it")
        if blk.W.shape != (blk.b.size, width):
            raise ModelFormatError(f"block {blk.id}: W shape {blk.W.shape} does not match sources width {width}")
        seen[blk.id] = blk.b.size
    if net.output is not None:
        width = 0
        for s in net.output.sources:
            if s not in seen:
                raise ModelFormatError(f"output unit reads unknown block {s}")
            width += seen[s]
        if net.output.w.shape != (width,):
            raise ModelFormatError("output weight width does not match connected blocks")
    elif not net.head:
        raise ModelFormatError("network has neither an output unit nor a head")


def dumps_model(net: NetworkGraph) -> str:
    return json.dumps(network_to_dict(net), indent=1, sort_keys=True) + "\n"


def save_model(net: NetworkGraph, path) -> Path:
    path = Path(path)
    path.write_text(dumps_model(net))
    return path


def load_model(path) -> NetworkGraph:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: not valid JSON (expected {FORMAT_NAME} v{FORMAT_VERSION})") from exc
    return network_from_dict(doc)
