import numpy as np
import pytest

from incrnet import evalkit, growth, synthetic, traincore
from incrnet import netgraph as ng
from incrnet.datapipe import Dataset, normalize_range
from incrnet.growth import GrowthConfig
from incrnet.netgraph import InputRef
from incrnet.traincore import TrainConfig

FAST = GrowthConfig(train_cfg=TrainConfig(batch_size=64, learning_rate=0.01, max_epochs=60), initial_widths=(8, 4))


def _split(ds, frac=0.75):
    k = int(ds.n * frac)
    return ds.take(np.arange(k)), ds.take(np.arange(k, ds.n))


def _f1(net, ds):
    return evalkit.metrics(evalkit.confusion(traincore.predict(net, ds.X), ds.y)).f1


def test_add_hidden_unit_contract(rng):
    net = ng.new_network(3, [2], seed=0)
    X = rng.normal(size=(50, 3))
    before = ng.forward(net, X)
    ids = [growth.add_hidden_unit(net, [InputRef()], rng=rng) for _ in range(3)]
    assert np.array_equal(before, ng.forward(net, X))
    assert len(set(ids)) == 3
    assert all(net.block(i).n_units == 1 and net.block(i).sources == [InputRef()] for i in ids)
    assert {k for k, v in ng.trainable_state(net).items() if v} == {ids[-1], "output"}


def test_linear_data_single_comparison():
    train, valid = _split(synthetic.linear_dataset(1200, seed=2, margin=0.2))
    net = growth.fresh_subnet(2, FAST)
    net, trace = growth.grow_until_no_convergence(net, train, valid, FAST)
    assert trace.steps[0].metric_after == 1.0
    assert len(trace.comparisons) == 1
    assert trace.stop_reason == "threshold"
    assert trace.final_units in (2, 3)
    # the rejected unit is gone
    assert sum(b.n_units for b in net.blocks) == trace.final_units


def test_impossible_threshold_stops_at_first_comparison(rng):
    ds = synthetic.xor_dataset(400, seed=1)
    cfg = FAST.with_(train_cfg=FAST.train_cfg.with_(threshold=1.0, max_epochs=5))
    net, trace = growth.grow_until_no_convergence(growth.fresh_subnet(2, cfg), ds, ds, cfg)
    assert len(trace.comparisons) == 1 and trace.stop_reason == "threshold"
    assert trace.final_units == 2


def test_rejected_unit_restores_snapshot():
    ds = synthetic.xor_dataset(400, seed=1)
    cfg = FAST.with_(train_cfg=FAST.train_cfg.with_(threshold=1.0, max_epochs=5))
    seen = []
    net, trace = growth.grow_until_no_convergence(
        growth.fresh_subnet(2, cfg), ds, ds, cfg, observer=lambda ev, n: seen.append((ev, n.copy()))
    )
    first_after = seen[1][1]
    assert ev_pairs(seen) == ["before_train", "after_train"] * 2
    assert np.array_equal(ng.parameter_vector(net), ng.parameter_vector(first_after))


def ev_pairs(seen):
    return [e for e, _ in seen]


def test_accepted_metrics_monotone():
    ds = normalize_range(synthetic.xor_dataset(1000, seed=4), -5, 5)[0]
    train, valid = _split(ds)
    _, trace = growth.grow_until_no_convergence(growth.fresh_subnet(2, FAST), train, valid, FAST)
    acc = trace.accepted_metrics
    assert all(b - a >= FAST.train_cfg.threshold for a, b in zip(acc, acc[1:]))
    units = [s.units_total for s in trace.steps]
    assert units == list(range(2, 2 + len(units)))


def test_unit_cap_on_constant_labels(rng):
    X = rng.normal(size=(100, 2))
    ds = Dataset(["a", "b"], X, np.zeros(100))
    cfg = FAST.with_(max_units_per_subnet=4, train_cfg=FAST.train_cfg.with_(threshold=0.0, max_epochs=3))
    net, trace = growth.grow_until_no_convergence(growth.fresh_subnet(2, cfg), ds, ds, cfg)
    assert trace.stop_reason == "unit_cap" and trace.final_units == 4


def test_constant_features_terminate(rng):
    ds = Dataset(["a", "b"], np.ones((100, 2)), (rng.random(100) > 0.5).astype(float))
    _, trace = growth.grow_until_no_convergence(growth.fresh_subnet(2, FAST), ds, ds, FAST)
    assert trace.stop_reason == "threshold"


def test_growth_needs_trainable_block():
    net = ng.new_network(2, [2], seed=0)
    ng.set_trainable(net, "all", False)
    with pytest.raises(ValueError):
        growth.grow_until_no_convergence(net, synthetic.xor_dataset(20), synthetic.xor_dataset(20), FAST)


def test_feature_groups_reduction():
    train, valid = _split(synthetic.xor_dataset(600, seed=3))
    a, _ = growth.ifl_feature_groups(train, valid, [[0, 1]], FAST)
    b, _ = growth.grow_until_no_convergence(growth.fresh_subnet(2, FAST), train, valid, FAST)
    assert np.array_equal(ng.parameter_vector(a), ng.parameter_vector(b))


def _two_signal_dataset(n=3000, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 4))
    y = (X[:, 0] + X[:, 2] > 0).astype(float)
    return Dataset([f"x{i}" for i in range(4)], X, y)


def test_second_group_improves_f1():
    ds = _two_signal_dataset()
    train, rest = _split(ds, 0.6)
    valid, test = _split(rest, 0.5)
    g1, _ = growth.ifl_feature_groups(train, valid, [[0, 1]], FAST)
    both, traces = growth.ifl_feature_groups(train, valid, [[0, 1], [2, 3]], FAST)
    f1_g1, f1_both = _f1(g1, test), _f1(both, test)
    assert 0.6 < f1_g1 < 0.85
    assert f1_both >= 0.9 and f1_both >= f1_g1
    assert len(traces) == 2


def test_three_groups_structure():
    ds = _two_signal_dataset(900)
    plan = [[2], [0], [1, 3]]
    net, traces = growth.ifl_feature_groups(ds, ds, plan, FAST)
    assert [t.phase for t in traces] == ["group 1", "group 2", "group 3"]
    assert net.blocks[0].sources == [InputRef((2,))]
    # later sub-networks read every feature seen so far
    cols = [b.sources[0].columns for b in net.blocks]
    assert (0, 2) in cols and None in cols


@pytest.mark.parametrize("plan", [[[0, 1], [1, 2]], [[0], []], [[0, 9]]])
def test_bad_plans(plan):
    ds = _two_signal_dataset(50)
    with pytest.raises(ValueError):
        growth.ifl_feature_groups(ds, ds, plan, FAST)


def _drift_parts(seed=0):
    c1, c2 = synthetic.drift_chunks(n_per_chunk=600, positive_rate=0.3, seed=seed)
    c2_train, rest = _split(c2, 0.7)
    c2_valid, c2_test = _split(rest, 0.5)
    return c1, c2_train, c2_valid, c2_test


def test_transfer_structure():
    c1, tr2, va2, _ = _drift_parts()
    events = []
    net, traces, state = growth.ifl_transfer(c1, tr2, va2, FAST, observer=lambda ev, n: events.append((ev, n.copy())))
    assert state.t_subset.shape == (tr2.n, 4)
    assert np.array_equal(state.t_labels, tr2.y)
    assert state.headless_model.output is None
    # first training of the transformed-feature phase starts from a constant 0.5
    first = [n for ev, n in events if ev == "before_train"][1]
    assert np.all(ng.forward(first, tr2.X) == 0.5)
    assert [t.phase for t in traces] == ["transformed features", "input features"]
    transformed_ids = state.headless_model.head
    grown = [b for b in net.blocks if b.id >= state.headless_model.next_block_id]
    assert any(b.sources == list(transformed_ids) for b in grown)
    assert any(b.sources == [InputRef()] for b in grown)


def test_transfer_keeps_initial_weights():
    c1, tr2, va2, _ = _drift_parts()
    initial, _ = growth.train_initial(c1, FAST)
    net, _, _ = growth.ifl_transfer(c1, tr2, va2, FAST, initial_model=initial)
    for a, b in zip(initial.blocks, net.blocks):
        assert np.array_equal(a.W, b.W) and np.array_equal(a.b, b.b)


def test_transfer_width_mismatch():
    c1, tr2, va2, _ = _drift_parts()
    with pytest.raises(ValueError):
        growth.ifl_transfer(c1.columns([0, 1]), tr2, va2, FAST)
    with pytest.raises(ValueError):
        growth.ifl_transfer(c1, tr2, va2.take(np.arange(0)), FAST)


def test_refit_zero_epochs_identical():
    c1, tr2, _, _ = _drift_parts()
    initial, _ = growth.train_initial(c1, FAST)
    model, _ = growth.refit(initial, tr2, FAST.with_(train_cfg=FAST.train_cfg.with_(max_epochs=0)))
    assert ng.dumps_model(model) == ng.dumps_model(initial)


def test_refit_changes_every_layer():
    c1, tr2, _, _ = _drift_parts()
    initial, _ = growth.train_initial(c1, FAST)
    model, _ = growth.refit(initial, tr2, FAST.with_(train_cfg=FAST.train_cfg.with_(max_epochs=1)))
    for a, b in zip(initial.parameters(), model.parameters()):
        assert not np.array_equal(a, b)


def test_refit_width_mismatch():
    c1, tr2, _, _ = _drift_parts()
    initial, _ = growth.train_initial(c1, FAST)
    with pytest.raises(ValueError):
        growth.refit(initial, tr2.columns([0, 1]), FAST)


def test_growth_config_validation():
    with pytest.raises(ValueError):
        GrowthConfig(initial_units_per_subnet=0)
    with pytest.raises(ValueError):
        GrowthConfig(initial_units_per_subnet=3, max_units_per_subnet=2)
