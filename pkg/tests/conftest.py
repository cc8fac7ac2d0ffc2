import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from incrnet import netgraph as ng
from incrnet.numerics import ACTIVATIONS, BCE_EPS

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def random_network(
    rng: np.random.Generator, input_width=None, max_blocks=3, max_units=10, output_activation=None, weight_std=0.5
):
    """A random net of up to ``max_blocks`` blocks and ``max_units`` hidden units.

    Blocks draw sources from the input (all or some columns) and earlier
    blocks; weights are drawn large enough that relu units are not all dead.
    """
    d = int(input_width or rng.integers(1, 5))
    net = ng.NetworkGraph(input_width=d)
    n_blocks = int(rng.integers(1, max_blocks + 1))
    budget = max_units
    acts = list(ACTIVATIONS)
    for i in range(n_blocks):
        units = int(rng.integers(1, budget - (n_blocks - i - 1) + 1))
        budget -= units
        sources = []
        if not net.blocks or rng.random() < 0.6:
            if d > 1 and rng.random() < 0.4:
                cols = sorted(rng.choice(d, size=int(rng.integers(1, d + 1)), replace=False).tolist())
                sources.append(ng.InputRef(tuple(cols)))
            else:
                sources.append(ng.InputRef())
        for blk in net.blocks:
            if rng.random() < 0.6:
                sources.append(blk.id)
        if not sources:
            sources.append(net.blocks[-1].id)
        ng.add_unit_block(
            net, units, sources, str(rng.choice(acts)), hidden_init=ng.InitPolicy("gaussian", weight_std),
            rng=rng, connect_output=False,
        )
    out_src = [blk.id for blk in net.blocks if rng.random() < 0.7] or [net.blocks[-1].id]
    ng.reconnect_output(
        net, out_src, init=ng.InitPolicy("gaussian", weight_std),
        activation=output_activation or str(rng.choice(["sigmoid", "identity", "tanh"])), rng=rng,
    )
    for blk in net.blocks:
        blk.b[:] = rng.normal(0.0, 0.5, size=blk.b.shape)
    net.output.b[0] = rng.normal(0.0, 0.5)
    return net


def in_bce_clamp(net, X) -> bool:
    """True when some prediction lies where the BCE clamp flattens the loss."""
    p = ng.forward(net, X)
    return bool(np.any((p < BCE_EPS) | (p > 1.0 - BCE_EPS)))


def naive_forward(net, x):
    """Per-sample recursive evaluation with plain Python loops."""
    import math

    def act(kind, z):
        if kind == "relu":
            return max(z, 0.0)
        if kind == "sigmoid":
            return 1.0 / (1.0 + math.exp(-z)) if z >= 0 else math.exp(z) / (1.0 + math.exp(z))
        if kind == "tanh":
            return math.tanh(z)
        return z

    memo = {}

    def source_values(src):
        if isinstance(src, ng.InputRef):
            cols = range(len(x)) if src.columns is None else src.columns
            return [float(x[c]) for c in cols]
        return block_values(src)

    def block_values(bid):
        if bid not in memo:
            blk = net.block(bid)
            inp = [v for s in blk.sources for v in source_values(s)]
            memo[bid] = [
                act(blk.activation, sum(blk.W[u, k] * inp[k] for k in range(len(inp))) + blk.b[u])
                for u in range(blk.n_units)
            ]
        return memo[bid]

    inp = [v for s in net.output.sources for v in block_values(s)]
    z = sum(net.output.w[k] * inp[k] for k in range(len(inp))) + net.output.b[0]
    return act(net.output.activation, z)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
