import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from afn.logtransform import (
    LtlParams,
    cross_feature_order,
    export_order_profile,
    field_order_profile,
    ltl_backward,
    ltl_forward,
)


def test_two_field_product():
    E = np.array([[1.0, 2.0], [3.0, 4.0]])
    Y = ltl_forward(E, LtlParams([[1.0], [1.0]]))
    np.testing.assert_allclose(Y, [[3.0, 8.0]], rtol=1e-14)


def test_zero_powers_give_ones():
    E = np.random.default_rng(0).uniform(0.1, 3.0, size=(4, 3))
    np.testing.assert_array_equal(ltl_forward(E, LtlParams(np.zeros((4, 2)))), np.ones((2, 3)))


def test_one_hot_power_returns_field():
    E = np.random.default_rng(1).uniform(0.1, 3.0, size=(4, 3))
    W = np.zeros((4, 1))
    W[2, 0] = 1.0
    np.testing.assert_allclose(ltl_forward(E, LtlParams(W))[0], E[2], rtol=1e-15)


def test_rejects_nonpositive_input():
    with pytest.raises(ValueError):
        ltl_forward(np.array([[1.0, 0.0]]), LtlParams([[1.0]]))


def test_params_validation():
    with pytest.raises(ValueError):
        LtlParams([[np.nan]])
    with pytest.raises(ValueError):
        LtlParams([1.0, 2.0])


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), m=st.integers(1, 6), k=st.integers(1, 4))
def test_binary_columns_match_products_within_8_ulps(seed, m, k):
    rng = np.random.default_rng(seed)
    # log-uniform on [0.01, 10]: six factors keep |S| inside the saturation clip
    E = np.exp(rng.uniform(np.log(0.01), np.log(10.0), size=(m, k)))
    W = rng.integers(0, 2, size=(m, 3)).astype(float)
    Y = ltl_forward(E, LtlParams(W))
    for j in range(3):
        expected = np.ones(k)
        for i in np.flatnonzero(W[:, j]):
            expected = expected * E[i]
        assert np.all(np.abs(Y[j] - expected) <= 8 * np.spacing(expected)), (Y[j], expected)


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), c=st.floats(0.1, 10.0))
def test_scaling_law(seed, c):
    rng = np.random.default_rng(seed)
    m, k, n = 4, 3, 5
    E = rng.uniform(0.1, 2.0, size=(m, k))
    W = rng.normal(size=(m, n))
    i = int(rng.integers(m))
    E2 = E.copy()
    E2[i] *= c
    base = ltl_forward(E, LtlParams(W))
    scaled = ltl_forward(E2, LtlParams(W))
    np.testing.assert_allclose(scaled, base * c ** W[i][:, None], rtol=1e-10)


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_positive_output(seed):
    rng = np.random.default_rng(seed)
    E = np.maximum(rng.uniform(0, 5, size=(5, 3)), 1e-7)
    W = rng.normal(scale=3.0, size=(5, 4))
    assert (ltl_forward(E, LtlParams(W)) > 0).all()


def test_backward_zero_weights_gives_log_sums():
    E = np.random.default_rng(3).uniform(0.1, 3.0, size=(3, 4))
    gW, gE = ltl_backward(E, LtlParams(np.zeros((3, 2))), np.ones((2, 4)))
    np.testing.assert_allclose(gW, np.repeat(np.log(E).sum(axis=1)[:, None], 2, axis=1), rtol=1e-14)


def test_backward_zero_upstream():
    E = np.random.default_rng(4).uniform(0.1, 3.0, size=(3, 4))
    gW, gE = ltl_backward(E, LtlParams(np.ones((3, 2))), np.zeros((2, 4)))
    assert not gW.any() and not gE.any()


def test_backward_matches_central_differences_over_100_draws():
    rng = np.random.default_rng(2024)
    h = 1e-5
    worst = 0.0
    for _ in range(100):
        m, k, n = rng.integers(1, 5), rng.integers(1, 4), rng.integers(1, 4)
        E = rng.uniform(0.2, 2.0, size=(m, k))
        W = rng.normal(size=(m, n))
        R = rng.normal(size=(n, k))

        def f(E_, W_):
            return float((R * ltl_forward(E_, LtlParams(W_))).sum())

        gW, gE = ltl_backward(E, LtlParams(W), R)
        for arr, grad in ((W, gW), (E, gE)):
            for c in np.ndindex(arr.shape):
                orig = arr[c]
                arr[c] = orig + h
                up = f(E, W)
                arr[c] = orig - h
                down = f(E, W)
                arr[c] = orig
                num = (up - down) / (2 * h)
                worst = max(worst, abs(grad[c] - num) / max(abs(grad[c]), abs(num), 1e-8))
    assert worst <= 1e-4


def test_batched_forward_matches_rows():
    rng = np.random.default_rng(6)
    E = rng.uniform(0.1, 2.0, size=(7, 3, 2))
    p = LtlParams(rng.normal(size=(3, 4)))
    batched = ltl_forward(E, p)
    for r in range(7):
        np.testing.assert_array_equal(batched[r], ltl_forward(E[r], p))


def test_saturation_has_zero_gradient():
    E = np.array([[1e-7], [1e-7]])
    p = LtlParams([[2.0], [2.0]])  # S = 4 ln(1e-7) < -30
    gW, gE = ltl_backward(E, p, np.ones((1, 1)))
    assert not gW.any() and not gE.any()
    assert ltl_forward(E, p)[0, 0] == pytest.approx(np.exp(-30.0))


@pytest.mark.parametrize("column, order", [([0.5, -0.5, 1.0], 2.0), ([0.0, 0.0, 0.0], 0.0), ([1.0, 1.0, 0.0], 2.0)])
def test_cross_feature_order(column, order):
    assert cross_feature_order(LtlParams(np.array(column)[:, None]), 0) == order


def test_cross_feature_order_range():
    with pytest.raises(IndexError):
        cross_feature_order(LtlParams(np.zeros((2, 3))), 3)


def test_field_order_profile():
    A, sums = field_order_profile(LtlParams([[0.2], [-0.7]]))
    np.testing.assert_allclose(sums, [0.2, 0.7])
    A, sums = field_order_profile(LtlParams(np.zeros((3, 2))))
    assert not A.any() and not sums.any()
    W = np.full((4, 3), 0.1)
    W[2] = [-1.0, 0.9, 2.0]
    assert int(np.argmax(field_order_profile(LtlParams(W))[1])) == 2


def test_export_order_profile(tmp_path):
    p = LtlParams([[0.5, -1.0], [0.25, 0.0]])
    export_order_profile(p, tmp_path / "w.csv", tmp_path / "o.csv")
    assert (tmp_path / "w.csv").read_text().splitlines() == [
        "neuron_id,field_id,abs_weight", "0,0,0.5", "0,1,0.25", "1,0,1.0", "1,1,0.0"]
    assert (tmp_path / "o.csv").read_text().splitlines() == ["neuron_id,order", "0,0.75", "1,1.0"]
