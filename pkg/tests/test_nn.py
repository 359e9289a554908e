import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from samplepairing.nn import (
    Adam,
    AdamConfig,
    Network,
    NetworkSpec,
    full_spec,
    grad_check,
    load_checkpoint,
    loss_xent_soft,
    predict,
    reduced_spec,
    save_checkpoint,
    softmax,
    tiny_spec,
)
from samplepairing.nn.checkpoint import CheckpointError
from samplepairing.nn.layers import BatchNorm, CacheError, Dropout, MaxPool2x2, ReLU

SIX_CONV_STAGES = [(28, 28, 64), (28, 28, 96), (14, 14, 96), (14, 14, 96), (14, 14, 128), (7, 7, 128),
                  (7, 7, 128), (7, 7, 192), (4, 4, 192), (512,), (10,)]


def test_full_network_stage_shapes():
    spec = full_spec(10)
    net = Network(spec, np.random.default_rng(0))
    x = np.random.default_rng(1).random((2, 28, 28, 3)).astype(np.float32)
    logits, shapes = net.forward(x, train=False, return_shapes=True)
    assert logits.shape == (2, 10)
    # output of every conv, pool and fc layer
    kinds = [layer[0] for layer in spec.layers[:-1]]
    staged = [s for s, k in zip(shapes, kinds) if k in ("conv", "pool", "fc")]
    assert staged == SIX_CONV_STAGES
    assert spec.shapes() == [tuple(s) for s in shapes]
    assert sum(k == "conv" for k in kinds) == 6 and sum(k == "bn" for k in kinds) == 7


def test_spec_validation():
    with pytest.raises(ValueError):
        NetworkSpec((4, 4, 3), (("fc", 3),))
    with pytest.raises(ValueError):
        NetworkSpec((4, 4, 3), (("fc", 3), ("conv", 4), ("fc", 2), ("softmax",)))
    with pytest.raises(ValueError):
        NetworkSpec((4, 4, 3), (("dropout", 1.0), ("fc", 2), ("softmax",)))
    with pytest.raises(ValueError):
        NetworkSpec((4, 4, 3), (("conv", 2), ("softmax",)))
    spec = reduced_spec(7, (14, 14, 3))
    assert NetworkSpec.from_dict(spec.to_dict()) == spec and spec.n_classes == 7


def test_input_shape_is_checked():
    net = Network(tiny_spec(), np.random.default_rng(0))
    with pytest.raises(ValueError):
        net.forward(np.zeros((2, 5, 4, 3)), train=False)


def test_eval_mode_is_deterministic():
    net = Network(reduced_spec(10, (12, 12, 3)), np.random.default_rng(0))
    x = np.random.default_rng(1).random((5, 12, 12, 3))
    np.testing.assert_array_equal(net.forward(x, train=False), net.forward(x, train=False))


def test_zero_dropout_is_identity():
    layer = Dropout(0.0)
    x = np.random.default_rng(0).random((3, 4))
    np.testing.assert_array_equal(layer.forward(x, True, np.random.default_rng(0)), x)
    np.testing.assert_array_equal(layer.forward(x, False, None), x)
    np.testing.assert_array_equal(layer.backward(np.ones_like(x)), np.ones_like(x))


def test_inverted_dropout_scaling():
    layer = Dropout(0.4)
    x = np.ones((200, 500))
    y = layer.forward(x, True, np.random.default_rng(0))
    np.testing.assert_allclose(np.unique(y), [0.0, 1 / 0.6])
    assert abs(y.mean() - 1.0) < 0.01
    np.testing.assert_array_equal(layer.forward(x, False, None), x)


def test_loss_examples():
    loss, _ = loss_xent_soft(np.zeros((1, 10)), np.eye(10)[[3]])
    assert loss == pytest.approx(np.log(10), abs=1e-12)
    logits = np.array([[0.3, -1.2, 2.0, 0.0]])
    p = softmax(logits)
    loss, grad = loss_xent_soft(logits, p)
    assert loss == pytest.approx(-(p * np.log(p)).sum(), abs=1e-12)
    np.testing.assert_allclose(grad, 0.0, atol=1e-15)
    blended = 0.5 * np.eye(4)[[1]] + 0.5 * np.eye(4)[[2]]
    l_mix, _ = loss_xent_soft(logits, blended)
    l1, _ = loss_xent_soft(logits, np.eye(4)[[1]])
    l2, _ = loss_xent_soft(logits, np.eye(4)[[2]])
    assert l_mix == pytest.approx((l1 + l2) / 2, abs=1e-12)


def test_loss_is_stable_for_huge_logits():
    loss, grad = loss_xent_soft(np.array([[1e4, 0.0, -1e4]]), np.eye(3)[[1]])
    assert np.isfinite(loss) and loss == pytest.approx(1e4)
    assert np.all(np.isfinite(grad))


finite_logits = arrays(np.float64, st.tuples(st.integers(1, 5), st.integers(2, 6)),
                       elements=st.floats(-50, 50, allow_nan=False))


@given(finite_logits)
def test_softmax_is_a_simplex_vector(logits):
    p = softmax(logits)
    assert np.all(p >= 0)
    np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-9)


@given(finite_logits, st.data())
def test_loss_is_at_least_target_entropy(logits, data):
    t = data.draw(arrays(np.float64, logits.shape, elements=st.floats(0.01, 1.0)))
    t = t / t.sum(axis=1, keepdims=True)
    loss, _ = loss_xent_soft(logits, t)
    entropy = -(t * np.log(t)).sum() / len(t)
    assert loss >= entropy - 1e-9 and loss >= 0


def test_two_class_loss_minimum_is_target_entropy():
    t = np.array([[0.3, 0.7]])
    grid = np.linspace(-5, 5, 2001)
    losses = [loss_xent_soft(np.array([[0.0, z]]), t)[0] for z in grid]
    entropy = -(t * np.log(t)).sum()
    assert min(losses) == pytest.approx(entropy, abs=1e-6)
    assert grid[int(np.argmin(losses))] == pytest.approx(np.log(0.7 / 0.3), abs=0.01)


def test_batchnorm_training_output_is_standardised():
    bn = BatchNorm(4, dtype=np.float64)
    x = np.random.default_rng(0).normal(3.0, 2.5, size=(16, 5, 5, 4))
    y = bn.forward(x, True, None)
    np.testing.assert_allclose(y.mean(axis=(0, 1, 2)), 0.0, atol=1e-6)
    np.testing.assert_allclose(y.var(axis=(0, 1, 2)), 1.0, atol=1e-4)
    assert np.all(bn.running_var >= 0)
    # running statistics move toward the batch statistics
    assert np.all(bn.running_mean > 0.2)


def test_closed_form_gradient_of_linear_softmax():
    spec = NetworkSpec((1, 1, 3), (("fc", 2), ("softmax",)))
    net = Network(spec, np.random.default_rng(0), dtype=np.float64)
    x = np.array([[[[0.5, -1.0, 2.0]]]])
    t = np.array([[0.0, 1.0]])
    logits = net.forward(x, train=True)
    _, d = loss_xent_soft(logits, t)
    grads = net.backward(d)
    expected = np.outer(x.ravel(), softmax(logits)[0] - t[0])
    np.testing.assert_allclose(grads["0.W"], expected, atol=1e-15)
    np.testing.assert_allclose(grads["0.b"], softmax(logits)[0] - t[0], atol=1e-15)


def test_relu_blocks_gradient_where_inactive():
    relu = ReLU()
    x = np.array([[-1.0, 0.0, 2.0]])
    relu.forward(x, True, None)
    np.testing.assert_array_equal(relu.backward(np.ones_like(x)), [[0.0, 0.0, 1.0]])


def test_maxpool_routes_gradient_to_the_maximum():
    pool = MaxPool2x2()
    x = np.arange(9, dtype=float).reshape(1, 3, 3, 1)
    y = pool.forward(x, True, None)
    np.testing.assert_array_equal(y[0, :, :, 0], [[4, 5], [7, 8]])
    dx = pool.backward(np.ones_like(y))
    np.testing.assert_array_equal(dx[0, :, :, 0], [[0, 0, 0], [0, 1, 1], [0, 1, 1]])


def test_backward_requires_a_training_forward():
    net = Network(tiny_spec(), np.random.default_rng(0))
    x = np.random.default_rng(1).random((2, 4, 4, 3))
    net.forward(x, train=False)
    with pytest.raises(CacheError):
        net.backward(np.zeros((2, 3), dtype=np.float32))
    net.forward(x, train=True, rng=np.random.default_rng(0))
    with pytest.raises(CacheError):
        net.backward(np.zeros((5, 3), dtype=np.float32))


def test_gradcheck_shrunk_network():
    report = grad_check(tiny_spec(), rng=0)
    assert report.passed, str(report)
    assert report.n_checked == Network(tiny_spec(), np.random.default_rng(0)).n_params()


def test_gradcheck_linear_network_is_at_noise_floor():
    spec = NetworkSpec((2, 2, 2), (("fc", 3), ("softmax",)))
    report = grad_check(spec, rng=1)
    assert report.max_rel_error < 1e-8, str(report)


def test_gradcheck_with_dropout_masks_held_fixed():
    spec = NetworkSpec((3, 3, 2), (("bn",), ("conv", 3), ("relu",), ("dropout", 0.5), ("fc", 4), ("relu",),
                                   ("dropout", 0.3), ("fc", 3), ("softmax",)))
    report = grad_check(spec, rng=2)
    assert report.passed, str(report)


def test_gradcheck_detects_a_wrong_gradient(monkeypatch):
    def broken(self, dy):
        cache = self._take_cache(dy)
        self.grads["W"] = 1.01 * (cache["x"].T @ dy)
        self.grads["b"] = dy.sum(axis=0)
        return (dy @ self.params["W"].T).reshape(cache["x_shape"])

    from samplepairing.nn.layers import FullyConnected
    monkeypatch.setattr(FullyConnected, "backward", broken)
    report = grad_check(NetworkSpec((2, 2, 1), (("fc", 3), ("softmax",))), rng=0)
    assert not report.passed and report.max_rel_error > 1e-3


def test_adam_first_step():
    p = {"x": np.array([0.0])}
    opt = Adam(AdamConfig(lr=0.001))
    opt.step(p, {"x": np.array([1.0])})
    # m_hat = g, v_hat = g^2 after bias correction
    assert p["x"][0] == pytest.approx(-0.001 / (1 + 1e-8), rel=1e-12)
    assert opt.t == 1


def test_adam_matches_reference_recurrence():
    rng = np.random.default_rng(0)
    grads = rng.normal(size=(5, 3))
    p = {"w": np.zeros(3)}
    opt = Adam()
    ref, m, v = np.zeros(3), np.zeros(3), np.zeros(3)
    for t, g in enumerate(grads, start=1):
        opt.step(p, {"w": g})
        m = 0.9 * m + 0.1 * g
        v = 0.999 * v + 0.001 * g * g
        ref = ref - 0.001 * (m / (1 - 0.9**t)) / (np.sqrt(v / (1 - 0.999**t)) + 1e-8)
    np.testing.assert_allclose(p["w"], ref, rtol=1e-12)


def test_adam_zero_gradients_leave_params_unchanged():
    p = {"w": np.array([1.5, -2.0])}
    opt = Adam()
    for _ in range(10):
        opt.step(p, {"w": np.zeros(2)})
    np.testing.assert_array_equal(p["w"], [1.5, -2.0])


def _train(seed, steps=5):
    net = Network(tiny_spec(width=3), np.random.default_rng(seed))
    opt = Adam()
    rng = np.random.default_rng(seed + 100)
    x = rng.random((8, 4, 4, 3))
    t = np.eye(3)[rng.integers(3, size=8)]
    for i in range(steps):
        net.train_step(x, t, np.random.default_rng([seed, i]))
        opt.step(net.named_params(), net.named_grads())
    return net, opt


def test_training_is_deterministic():
    a, _ = _train(3)
    b, _ = _train(3)
    for k, v in a.named_params().items():
        np.testing.assert_array_equal(v, b.named_params()[k])


def test_predict_breaks_ties_toward_lowest_class():
    np.testing.assert_array_equal(predict(np.array([[1.0, 1.0, 0.0], [0.0, 2.0, 2.0]])), [0, 1])


def test_checkpoint_round_trip_is_exact(tmp_path):
    net, opt = _train(4)
    path = tmp_path / "ck.npz"
    save_checkpoint(path, net, opt, extra={"epochs": 5})
    net2, opt2, extra = load_checkpoint(path)
    assert extra == {"epochs": 5} and opt2.t == opt.t and net2.spec == net.spec
    for k, v in net.named_params().items():
        np.testing.assert_array_equal(net2.named_params()[k], v)
    for k, v in net.buffers().items():
        np.testing.assert_array_equal(net2.buffers()[k], v)
    for k in opt.m:
        np.testing.assert_array_equal(opt2.m[k], opt.m[k])
        np.testing.assert_array_equal(opt2.v[k], opt.v[k])
    x = np.random.default_rng(0).random((3, 4, 4, 3))
    np.testing.assert_array_equal(net.forward(x, train=False), net2.forward(x, train=False))
    # identical state gives identical bytes
    path2 = tmp_path / "ck2.npz"
    save_checkpoint(path2, net2, opt2, extra={"epochs": 5})
    assert path.read_bytes() == path2.read_bytes()


def test_checkpoint_rejects_foreign_files(tmp_path):
    import zipfile

    path = tmp_path / "x.npz"
    with zipfile.ZipFile(path, "w") as zf:
        zf.writestr("meta.json", '{"format": "other", "version": 1}')
    with pytest.raises(CheckpointError):
        load_checkpoint(path)
