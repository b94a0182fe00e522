import numpy as np
import pytest

from afn.data import Batch
from afn.gradcheck import GRADCHECK_TOLERANCE, tiny_problem
from afn.model import ModelConfig
from afn.network import (
    AFN,
    INFER,
    TRAIN,
    BatchNorm,
    DenseLayer,
    PredictionHead,
    bn_backward,
    bn_forward,
    concat_neurons,
    mlp_backward,
    mlp_forward,
    predict_logit,
)
from afn.training import grad_check

from conftest import categorical_schema, random_batch


# -- concat / head -----------------------------------------------------------

def test_concat_examples():
    np.testing.assert_array_equal(concat_neurons(np.array([[1.0, 2.0], [3.0, 4.0]])), [1, 2, 3, 4])
    np.testing.assert_array_equal(concat_neurons(np.array([[5.0, 6.0]])), [5, 6])
    assert not concat_neurons(np.zeros((3, 2))).any()
    assert concat_neurons(np.zeros((7, 3, 2))).shape == (7, 6)


def test_head_examples():
    assert predict_logit(np.array([4.0, -1.0]), PredictionHead(np.zeros(2), np.array([0.7]))) == 0.7
    head = PredictionHead(np.array([0.5, 0.5]), np.array([0.0]))
    assert predict_logit(np.array([1.0, 2.0]), head) == 1.5
    assert predict_logit(np.array([2.0, 4.0]), head) == 3.0
    with pytest.raises(ValueError):
        predict_logit(np.ones(3), head)


# -- batch normalization ------------------------------------------------------

def test_bn_train_standardizes():
    x = np.random.default_rng(0).normal(3.0, 5.0, size=(64, 4))
    out, _ = bn_forward(x, BatchNorm.fresh(4), TRAIN)
    np.testing.assert_allclose(out.mean(axis=0), 0.0, atol=1e-6)
    np.testing.assert_allclose(out.var(axis=0), 1.0, atol=1e-4)


def test_bn_affine():
    x = np.random.default_rng(1).normal(size=(200, 3))
    x = (x - x.mean(0)) / x.std(0)
    bn = BatchNorm.fresh(3)
    bn.gamma[:] = 2.0
    bn.beta[:] = 3.0
    out, _ = bn_forward(x, bn, TRAIN)
    np.testing.assert_allclose(out.mean(axis=0), 3.0, atol=1e-9)
    np.testing.assert_allclose(out.std(axis=0), 2.0, atol=1e-4)


def test_bn_infer_near_identity():
    x = np.random.default_rng(2).normal(size=(5, 3))
    out, _ = bn_forward(x, BatchNorm.fresh(3), INFER)
    np.testing.assert_allclose(out, x / np.sqrt(1 + 1e-5), rtol=1e-15)


def test_bn_train_needs_two_rows():
    with pytest.raises(ValueError):
        bn_forward(np.ones((1, 3)), BatchNorm.fresh(3), TRAIN)


def test_bn_running_update_uses_momentum():
    x = np.array([[1.0], [3.0]])
    bn = BatchNorm.fresh(1)
    _, cache = bn_forward(x, bn, TRAIN)
    bn.update_running(cache)
    np.testing.assert_allclose(bn.running_mean, [0.2])  # 0.9*0 + 0.1*2
    np.testing.assert_allclose(bn.running_var, [1.0])  # 0.9*1 + 0.1*1
    _, cache = bn_forward(x, bn, INFER)
    bn.update_running(cache)
    np.testing.assert_allclose(bn.running_mean, [0.2])


@pytest.mark.parametrize("mode", [TRAIN, INFER])
def test_bn_backward_finite_differences(mode):
    rng = np.random.default_rng(3)
    x = rng.normal(size=(6, 3))
    R = rng.normal(size=(6, 3))
    bn = BatchNorm(rng.normal(size=3), rng.normal(size=3), rng.normal(size=3), rng.uniform(0.5, 2, 3))
    _, cache = bn_forward(x, bn, mode)
    dx, dg, db = bn_backward(R, cache)
    h = 1e-6
    for arr, grad in ((x, dx), (bn.gamma, dg), (bn.beta, db)):
        for c in np.ndindex(arr.shape):
            orig = arr[c]
            arr[c] = orig + h
            up = (R * bn_forward(x, bn, mode)[0]).sum()
            arr[c] = orig - h
            down = (R * bn_forward(x, bn, mode)[0]).sum()
            arr[c] = orig
            assert grad[c] == pytest.approx((up - down) / (2 * h), rel=1e-5, abs=1e-8)


# -- MLP -----------------------------------------------------------------------

def test_mlp_relu_example():
    layer = DenseLayer(np.zeros((2, 3)), np.array([-1.0, 2.0]))
    zL, _ = mlp_forward(np.array([5.0, -4.0, 1.0]), [layer], [None])
    np.testing.assert_array_equal(zL, [0.0, 2.0])


def test_mlp_without_layers_is_passthrough():
    z0 = np.arange(6.0).reshape(2, 3)
    zL, _ = mlp_forward(z0, [], [])
    assert zL is z0


def test_mlp_backward_finite_differences():
    rng = np.random.default_rng(4)
    layers = [DenseLayer(rng.normal(size=(4, 3)), rng.normal(size=4)),
              DenseLayer(rng.normal(size=(2, 4)), rng.normal(size=2))]
    bns = [BatchNorm(rng.uniform(0.5, 2, 4), rng.normal(size=4), np.zeros(4), np.ones(4)), None]
    z0 = rng.normal(size=(5, 3))
    R = rng.normal(size=(5, 2))

    def f():
        return (R * mlp_forward(z0, layers, bns, TRAIN)[0]).sum()

    _, cache = mlp_forward(z0, layers, bns, TRAIN)
    dz0, lg, bg = mlp_backward(R, layers, cache)
    pairs = [(z0, dz0), (bns[0].gamma, bg[0][0]), (bns[0].beta, bg[0][1])]
    for layer, (dW, db) in zip(layers, lg):
        pairs += [(layer.W, dW), (layer.b, db)]
    h = 1e-6
    for arr, grad in pairs:
        for c in np.ndindex(arr.shape):
            orig = arr[c]
            arr[c] = orig + h
            up = f()
            arr[c] = orig - h
            down = f()
            arr[c] = orig
            num = (up - down) / (2 * h)
            assert abs(grad[c] - num) <= 1e-4 * max(abs(grad[c]), abs(num), 1e-6)


# -- full AFN --------------------------------------------------------------------

def _bare_afn(m=3, k=2, n=1, seed=0):
    cfg = ModelConfig(embed_dim=k, log_neurons=n, hidden=(), bn=False, init_scale=50.0)
    return AFN(categorical_schema(m), cfg, seed=seed)


def test_afn_one_hot_neuron_returns_clamped_embedding_sum():
    model = _bare_afn()
    model.params["ltl.W"][:] = [[0.0], [1.0], [0.0]]
    model.params["head.w"][:] = 1.0
    model.params["head.b"][:] = 0.0
    model.params["embed.cat.1"][2] = [-0.25, 0.4]
    b = Batch(np.array([1.0]), np.array([[1, 2, 3]]), np.ones((1, 3)))
    assert model.predict_logits(b)[0] == pytest.approx(0.65, rel=1e-14)


def test_afn_zero_powers_give_nk_plus_bias():
    model = _bare_afn(n=4, k=3)
    model.params["ltl.W"][:] = 0.0
    model.params["head.w"][:] = 1.0
    model.params["head.b"][:] = 0.25
    b = random_batch(model.schema, 5, np.random.default_rng(0))
    np.testing.assert_allclose(model.predict_logits(b), 12.25, rtol=1e-14)


def test_afn_infer_is_pure_and_batch_independent():
    model = AFN(categorical_schema(4), ModelConfig(embed_dim=3, log_neurons=5, hidden=(6, 4)), seed=2)
    rng = np.random.default_rng(9)
    # perturb running statistics so infer mode really uses them
    for name, buf in model.buffers.items():
        buf[...] = rng.uniform(0.5, 1.5, buf.shape) if name.endswith("var") else rng.normal(size=buf.shape)
    before = model.copy_state()
    b = random_batch(model.schema, 33, rng)
    full = model.predict_logits(b)
    again = model.predict_logits(b)
    np.testing.assert_array_equal(full, again)
    for r in (0, 7, 32):
        single = Batch(b.labels[r:r + 1], b.idx[r:r + 1], b.val[r:r + 1])
        assert model.predict_logits(single)[0] == full[r]
    for k, v in model.copy_state().items():
        np.testing.assert_array_equal(v, before[k])


def test_afn_train_forward_does_not_touch_buffers():
    model = AFN(categorical_schema(3), ModelConfig(embed_dim=2, log_neurons=2, hidden=(3,)), seed=0)
    before = model.copy_state()
    _, cache = model.forward(random_batch(model.schema, 8, np.random.default_rng(1)), TRAIN)
    assert all(np.array_equal(v, before[k]) for k, v in model.copy_state().items())
    model.commit_stats(cache)
    assert not np.array_equal(model.buffers["bn.exp.running_mean"], before["bn.exp.running_mean"])


def test_afn_zero_upstream_gives_zero_gradients():
    model, batch = tiny_problem("afn", seed=0)
    _, cache = model.forward(batch, TRAIN)
    grads = model.backward(cache, np.zeros(len(batch)))
    assert set(grads) == set(model.params)
    assert all(not g.any() for g in grads.values())


def test_afn_symbolic_one_neuron_gradient():
    """logit = w_p * e1^a * e2^b + b_p with one categorical row per field and k=1."""
    cfg = ModelConfig(embed_dim=1, log_neurons=1, hidden=(), bn=False)
    model = AFN(categorical_schema(2, card=2), cfg, seed=0)
    e1, e2, a, b, wp = 0.7, 1.3, 0.4, -1.1, 0.8
    model.params["embed.cat.0"][1] = e1
    model.params["embed.cat.1"][1] = e2
    model.params["ltl.W"][:] = [[a], [b]]
    model.params["head.w"][:] = wp
    model.params["head.b"][:] = 0.1
    batch = Batch(np.array([1.0]), np.array([[1, 1]]), np.ones((1, 2)))
    logits, cache = model.forward(batch, TRAIN)
    y = e1 ** a * e2 ** b
    assert logits[0] == pytest.approx(wp * y + 0.1, rel=1e-14)
    g = model.backward(cache, np.ones(1))
    assert g["head.w"][0] == pytest.approx(y, rel=1e-13)
    assert g["head.b"][0] == 1.0
    np.testing.assert_allclose(g["ltl.W"][:, 0], [wp * y * np.log(e1), wp * y * np.log(e2)], rtol=1e-12)
    assert g["embed.cat.0"][1, 0] == pytest.approx(wp * a * y / e1, rel=1e-12)
    assert g["embed.cat.1"][1, 0] == pytest.approx(wp * b * y / e2, rel=1e-12)
    assert g["embed.cat.0"][0, 0] == 0.0


@pytest.mark.parametrize("bn, site", [(True, "ln"), (True, "sum"), (False, "ln")])
@pytest.mark.parametrize("seed", [0, 1])
def test_afn_full_gradient_check(bn, site, seed):
    model, batch = tiny_problem("afn", seed=seed, bn=bn, ln_bn_site=site)
    assert grad_check(model, batch).max_rel_error <= GRADCHECK_TOLERANCE


def test_config_validation():
    with pytest.raises(ValueError):
        ModelConfig(ln_bn_site="exp")
    with pytest.raises(ValueError):
        ModelConfig(hidden=(4, 0))
    cfg = ModelConfig(hidden=[5])
    assert ModelConfig.from_dict(cfg.to_dict()) == cfg
