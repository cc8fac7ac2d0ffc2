import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from incrnet import evalkit, numerics
from incrnet import netgraph as ng
from incrnet import synthetic, traincore
from incrnet.traincore import TrainConfig

from conftest import in_bce_clamp, random_network


def test_default_hyperparameters():
    cfg = TrainConfig()
    assert (cfg.learning_rate, cfg.batch_size, cfg.max_epochs, cfg.patience, cfg.threshold) == (
        0.001, 1024, 100, 10, 0.01,
    )


@pytest.mark.parametrize(
    "changes", [{"learning_rate": 0}, {"batch_size": 0}, {"patience": 0}, {"threshold": -0.1}, {"criterion": "x"}]
)
def test_config_validation(changes):
    with pytest.raises(ValueError):
        TrainConfig(**changes)


def test_patience_on_flat_metric(rng):
    # a frozen net gives a flat metric: epoch 1 sets the best, epochs 2..11 do not improve
    net = ng.new_network(3, [2], seed=0)
    ng.set_trainable(net, "all", False)
    X, y = rng.normal(size=(50, 3)), (rng.random(50) > 0.5).astype(float)
    for crit, valid in (("train_loss", None), ("validation_accuracy", (X, y))):
        res = traincore.train(net, (X, y), valid, TrainConfig(criterion=crit, patience=10))
        assert res.epochs_run == 11 and res.stopped_by == "patience"
        assert len(res.metric_history) == res.epochs_run


def test_validation_criterion_needs_data(rng):
    net = ng.new_network(3, [2], seed=0)
    with pytest.raises(ValueError, match="validation"):
        traincore.train(net, (rng.normal(size=(5, 3)), np.zeros(5)), None, TrainConfig())


def test_width_mismatch(rng):
    net = ng.new_network(3, [2], seed=0)
    with pytest.raises(ValueError, match="width"):
        traincore.train(net, (rng.normal(size=(5, 4)), np.zeros(5)), None, TrainConfig(criterion="train_loss"))


def test_linearly_separable_single_unit():
    ds = synthetic.linear_dataset(1000, seed=3)
    net = ng.new_network(2, [1], "relu", ng.XAVIER, seed=0)
    cfg = TrainConfig(criterion="train_loss", learning_rate=0.05, batch_size=32, max_epochs=100)
    traincore.train(net, ds, None, cfg)
    assert traincore.evaluate(net, ds) >= 0.99


def test_max_epochs_zero_is_noop(rng):
    net = ng.new_network(3, [2], seed=0)
    before = ng.parameter_vector(net).copy()
    res = traincore.train(net, (rng.normal(size=(5, 3)), np.ones(5)), None, TrainConfig(max_epochs=0, criterion="train_loss"))
    assert res.epochs_run == 0 and np.array_equal(before, ng.parameter_vector(net))


def test_deterministic(rng):
    X, y = rng.normal(size=(300, 4)), (rng.random(300) > 0.5).astype(float)
    results = []
    for _ in range(2):
        net = ng.new_network(4, [5], init=ng.XAVIER, seed=1)
        res = traincore.train(net, (X, y), (X, y), TrainConfig(batch_size=32, max_epochs=20, seed=9))
        results.append((res.metric_history, ng.parameter_vector(net)))
    assert results[0][0] == results[1][0]
    assert np.array_equal(results[0][1], results[1][1])


def test_train_loss_best_so_far_non_increasing(rng):
    X, y = rng.normal(size=(200, 3)), (rng.random(200) > 0.5).astype(float)
    net = ng.new_network(3, [4], init=ng.XAVIER, seed=1)
    res = traincore.train(net, (X, y), None, TrainConfig(criterion="train_loss", batch_size=16, max_epochs=30))
    best = np.minimum.accumulate(res.metric_history)
    assert np.all(np.diff(best) <= 0)


def test_early_stop_epoch_rule(rng):
    # stop epoch e is the first where none of the last `patience` epochs progressed
    X, y = rng.normal(size=(200, 3)), (rng.random(200) > 0.5).astype(float)
    net = ng.new_network(3, [4], init=ng.XAVIER, seed=1)
    cfg = TrainConfig(criterion="train_loss", batch_size=8, max_epochs=300, patience=3, learning_rate=0.05)
    res = traincore.train(net, (X, y), None, cfg)
    h = res.metric_history
    progressed = [i == 0 or h[i] < min(h[:i]) for i in range(len(h))]
    expected = next(
        (e + 1 for e in range(len(h)) if e + 1 >= cfg.patience and not any(progressed[e - cfg.patience + 1:e + 1])),
        cfg.max_epochs,
    )
    assert res.epochs_run == expected


def test_converged_examples():
    assert traincore.converged(0.50, 0.48, 0.01, "train_loss")
    assert not traincore.converged(0.90, 0.905, 0.01, "validation_accuracy")
    assert traincore.converged(0.7, 0.7, 0.0, "validation_accuracy")
    assert traincore.converged(0.7, 0.7, 0.0, "train_loss")


def test_evaluate_examples(rng):
    net = ng.new_network(3, [2], init=ng.ZEROS)
    y = np.array([0.0, 1.0] * 10)
    assert traincore.evaluate(net, (rng.normal(size=(20, 3)), y)) == 0.5
    with pytest.raises(ValueError):
        traincore.evaluate(net, (np.zeros((0, 3)), np.zeros(0)))


def test_evaluate_memorised():
    ds = synthetic.xor_dataset(40, noise=0.05, seed=1)
    net = ng.NetworkGraph(input_width=2)
    # hand-made XOR detector: same-sign product via two relu units
    ng.add_unit_block(net, 2, [ng.InputRef()], connect_output=False)
    net.blocks[0].W[:] = [[1.0, 1.0], [-1.0, -1.0]]
    net.blocks[0].b[:] = [-1.0, -1.0]
    ng.reconnect_output(net, [0])
    net.output.w[:] = [20.0, 20.0]
    net.output.b[0] = -0.5
    assert traincore.evaluate(net, ds) == 1.0


def test_accuracy_consistent_with_confusion(rng):
    net = ng.new_network(3, [4], init=ng.XAVIER, seed=5)
    X, y = rng.normal(size=(500, 3)), (rng.random(500) > 0.5).astype(float)
    c = evalkit.confusion(traincore.predict(net, X), y)
    assert traincore.evaluate(net, (X, y)) == pytest.approx(1 - (c.fp + c.fn) / c.total, abs=1e-15)


@given(st.integers(0, 2**32 - 1), st.sampled_from(["bce", "mse"]))
def test_network_gradients_match_finite_differences(seed, loss):
    rng = np.random.default_rng(seed)
    net = random_network(rng, output_activation="sigmoid" if loss == "bce" else None)
    for blk in net.blocks:
        blk.trainable = bool(rng.random() < 0.8)
    X = rng.normal(size=(8, net.input_width))
    y = (rng.random(8) > 0.5).astype(float)
    # inside the clamp the loss is flat but the fused delta is not
    assume(loss != "bce" or not in_bce_clamp(net, X))
    _, grad = traincore.loss_and_gradient(net, X, y, loss)

    def f(theta):
        trial = net.copy()
        ng.set_parameter_vector(trial, theta, trainable_only=True)
        return numerics.loss_value(loss, ng.forward(trial, X), y)

    fd = numerics.finite_difference_gradient(f, ng.parameter_vector(net, trainable_only=True))
    mask = np.abs(grad) > 1e-6
    # relu kinks make finite differences meaningless right at zero crossings
    assert np.all(np.abs(grad - fd)[mask] / np.abs(grad)[mask] < 1e-4)


@given(st.integers(0, 2**32 - 1))
def test_frozen_parameters_bit_identical(seed):
    rng = np.random.default_rng(seed)
    net = random_network(rng, output_activation="sigmoid")
    frozen = [b.id for b in net.blocks if rng.random() < 0.5]
    ng.set_trainable(net, frozen, False)
    before = {b.id: (b.W.copy(), b.b.copy()) for b in net.blocks}
    X, y = rng.normal(size=(40, net.input_width)), (rng.random(40) > 0.5).astype(float)
    traincore.train(net, (X, y), None, TrainConfig(criterion="train_loss", batch_size=8, max_epochs=3))
    for bid in frozen:
        blk = net.block(bid)
        assert np.array_equal(before[bid][0], blk.W) and np.array_equal(before[bid][1], blk.b)
