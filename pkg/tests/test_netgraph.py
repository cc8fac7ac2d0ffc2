import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from incrnet import netgraph as ng
from incrnet import traincore
from incrnet.netgraph import InputRef

from conftest import naive_forward, random_network


def test_initial_topology_parameter_count():
    net = ng.new_network(29, [500, 10], "relu", ng.GAUSSIAN, seed=7)
    assert net.n_params() == 29 * 500 + 500 + 500 * 10 + 10 + 10 * 1 + 1


def test_zero_network_is_constant_output_bias():
    net = ng.new_network(2, [1], "identity", ng.ZEROS, seed=3, output_activation="identity")
    net.output.b[0] = 0.75
    X = np.random.default_rng(0).normal(size=(20, 2))
    assert np.all(ng.forward(net, X) == 0.75)


def test_same_seed_same_parameters():
    a = ng.new_network(5, [4, 3], seed=11)
    b = ng.new_network(5, [4, 3], seed=11)
    assert np.array_equal(ng.parameter_vector(a), ng.parameter_vector(b))


def test_zero_widths_rejected():
    with pytest.raises(ValueError):
        ng.new_network(3, [4, 0])
    with pytest.raises(ValueError):
        ng.new_network(0, [2])


def test_zero_extension_exact(rng):
    net = ng.new_network(4, [3], seed=1)
    X = rng.normal(size=(100, 4))
    before = ng.forward(net, X)
    ng.add_unit_block(net, 1, [InputRef()], rng=rng)
    assert np.array_equal(before, ng.forward(net, X))


def test_two_unit_block_parameter_increase():
    net = ng.new_network(6, [3], seed=1)
    n0 = net.n_params()
    ng.add_unit_block(net, 2, [InputRef(), 0])
    width = 6 + 3
    assert net.n_params() - n0 == 2 * width + 2 + 2


def test_gaussian_sampler_std():
    W = ng.GAUSSIAN.sample(np.random.default_rng(0), 100, 100)
    assert 0.008 <= W.std() <= 0.012
    assert np.all(ng.ZEROS.sample(np.random.default_rng(0), 7, 3) == 0.0)


def test_xavier_bounds():
    W = ng.XAVIER.sample(np.random.default_rng(0), 10, 30)
    assert np.abs(W).max() <= np.sqrt(6.0 / 40)


def test_new_block_bias_zero_and_trainable():
    net = ng.new_network(3, [2], seed=0)
    bid = ng.add_unit_block(net, 3, [InputRef()], hidden_init=ng.XAVIER)
    blk = net.block(bid)
    assert np.all(blk.b == 0.0) and blk.trainable


def test_dangling_source():
    net = ng.new_network(3, [2], seed=0)
    with pytest.raises(ValueError, match="dangling"):
        ng.add_unit_block(net, 1, [42])


def test_forward_zero_weights_half():
    net = ng.new_network(3, [2], init=ng.ZEROS)
    assert ng.forward(net, np.array([1.0, -2.0, 3.0])) == 0.5


def test_forward_hand_built():
    net = ng.NetworkGraph(input_width=2)
    ng.add_unit_block(net, 1, [InputRef()], connect_output=False)
    net.blocks[0].W[:] = [[1.0, 1.0]]
    ng.reconnect_output(net, [0], activation="identity")
    net.output.w[:] = [2.0]
    net.output.b[0] = 1.0
    assert ng.forward(net, np.array([1.0, 2.0])) == 7.0


def test_forward_matches_naive_evaluator():
    rng = np.random.default_rng(5)
    for _ in range(10):
        net = random_network(rng)
        X = rng.normal(size=(100, net.input_width))
        fast = ng.forward(net, X)
        slow = np.array([naive_forward(net, x) for x in X])
        assert np.allclose(fast, slow, rtol=0, atol=1e-12)


def test_forward_without_output_errors():
    net = ng.new_network(2, [2], seed=0)
    net.output = None
    with pytest.raises(ValueError, match="output"):
        ng.forward(net, np.zeros(2))


def test_new_and_output_selector():
    net = ng.new_network(3, [2, 2], seed=0)
    bid = ng.add_unit_block(net, 1, [InputRef()])
    ng.set_trainable(net, "new_and_output")
    state = ng.trainable_state(net)
    assert {k for k, v in state.items() if v} == {bid, "output"}


def test_unknown_block_id():
    net = ng.new_network(3, [2], seed=0)
    with pytest.raises(KeyError):
        ng.set_trainable(net, [99], False)


def test_freeze_all_train_keeps_everything(rng):
    net = ng.new_network(3, [4], seed=0)
    ng.set_trainable(net, "all", False)
    before = ng.parameter_vector(net).copy()
    X, y = rng.normal(size=(64, 3)), (rng.random(64) > 0.5).astype(float)
    res = traincore.train(net, (X, y), None, traincore.TrainConfig(max_epochs=50, criterion="train_loss", patience=100))
    assert np.array_equal(before, ng.parameter_vector(net))
    assert len(set(res.metric_history)) == 1


def test_unfreeze_all_changes_every_block(rng):
    net = ng.new_network(3, [4, 2], init=ng.XAVIER, seed=0)
    before = [p.copy() for p in net.parameters()]
    X, y = rng.normal(size=(64, 3)), (rng.random(64) > 0.5).astype(float)
    traincore.train(net, (X, y), None, traincore.TrainConfig(max_epochs=1, criterion="train_loss"))
    assert all(not np.array_equal(a, b) for a, b in zip(before, net.parameters()))


def test_remove_output_unit(rng):
    net = ng.new_network(29, [500, 10], seed=0)
    X = rng.normal(size=(7, 29))
    _, acts = ng.forward(net, X, return_trace=True)
    ng.remove_output_unit(net)
    T = ng.forward(net, X)
    assert T.shape == (7, 10)
    assert np.array_equal(T, acts[net.blocks[-1].id])
    with pytest.raises(ValueError):
        ng.remove_output_unit(net)


def test_reconnect_output_zero_gives_half(rng):
    net = ng.new_network(4, [3], seed=0)
    ng.remove_output_unit(net)
    ng.reconnect_output(net, [net.blocks[-1].id])
    assert np.all(ng.forward(net, rng.normal(size=(5, 4))) == 0.5)


def _grown_net():
    net = ng.new_network(4, [3], seed=2)
    ng.add_unit_block(net, 1, [InputRef((0, 2))], rng=np.random.default_rng(1))
    ng.add_unit_block(net, 2, [InputRef(), 0], rng=np.random.default_rng(2))
    net.blocks[1].trainable = False
    net.output.w[:] = np.random.default_rng(3).normal(size=net.output.w.size)
    return net


def test_model_round_trip(tmp_path, rng):
    net = _grown_net()
    path = ng.save_model(net, tmp_path / "m.cnet.json")
    back = ng.load_model(path)
    X = rng.normal(size=(100, 4))
    assert np.array_equal(ng.forward(net, X), ng.forward(back, X))
    assert ng.trainable_state(back) == ng.trainable_state(net)
    assert [b.id for b in back.blocks] == [b.id for b in net.blocks]
    assert back.next_block_id == net.next_block_id
    assert ng.dumps_model(back) == ng.dumps_model(net)


def test_model_headless_round_trip(tmp_path, rng):
    net = _grown_net()
    ng.remove_output_unit(net)
    back = ng.load_model(ng.save_model(net, tmp_path / "h.cnet.json"))
    X = rng.normal(size=(10, 4))
    assert np.array_equal(ng.forward(net, X), ng.forward(back, X))


def test_model_bad_magic(tmp_path):
    path = ng.save_model(_grown_net(), tmp_path / "m.cnet.json")
    doc = json.loads(path.read_text())
    doc["format"] = "something.else"
    path.write_text(json.dumps(doc))
    with pytest.raises(ng.ModelFormatError, match="version 1"):
        ng.load_model(path)


def test_model_corrupt_file(tmp_path):
    path = tmp_path / "bad.cnet.json"
    path.write_text("{not json")
    with pytest.raises(ng.ModelFormatError):
        ng.load_model(path)


@given(st.integers(0, 2**32 - 1))
def test_zero_extension_property(seed):
    rng = np.random.default_rng(seed)
    net = random_network(rng, output_activation="sigmoid")
    X = rng.normal(size=(20, net.input_width))
    before = ng.forward(net, X)
    sources = [InputRef()] + [b.id for b in net.blocks if rng.random() < 0.5]
    ng.add_unit_block(net, int(rng.integers(1, 4)), sources, hidden_init=ng.InitPolicy("gaussian", 1.0), rng=rng)
    assert np.array_equal(before, ng.forward(net, X))


@given(st.integers(0, 2**32 - 1))
def test_parameter_accounting(seed):
    rng = np.random.default_rng(seed)
    net = random_network(rng)
    for blk in net.blocks:
        blk.trainable = bool(rng.random() < 0.5)
    expected = sum(b.n_units * net.source_width(b.sources) + b.n_units for b in net.blocks if b.trainable)
    expected += net.output.w.size + 1
    assert net.n_params(trainable_only=True) == expected


@given(st.integers(0, 2**32 - 1))
def test_topological_sources(seed):
    net = random_network(np.random.default_rng(seed))
    seen = set()
    for blk in net.blocks:
        for s in blk.sources:
            assert isinstance(s, InputRef) or s in seen
        seen.add(blk.id)
