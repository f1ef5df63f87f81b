import zlib

import numpy as np
import pytest

from core.errors import ContractError, DimensionError, LabelIndexError, NonFiniteError, OracleError
from core.tensor import (GradTape, Tensor, add, backward, concat, elementwise, finite_difference_check, hadamard,
                         matmul, mean, mul, relu, reshape, sigmoid, softmax_cross_entropy, square, sub, take, tanh,
                         tile_rows, transpose, tsum)


def test_matmul_identity():
    out = matmul(Tensor(np.eye(2)), Tensor([[3.0, 4.0], [5.0, 6.0]]))
    np.testing.assert_array_equal(out.data, [[3, 4], [5, 6]])


def test_matmul_hand_computed():
    out = matmul(Tensor([[1.0, 2.0], [3.0, 4.0]]), Tensor([[5.0], [6.0]]))
    np.testing.assert_array_equal(out.data, [[17], [39]])


def test_matmul_zero_annihilates(rng):
    out = matmul(Tensor(np.zeros((2, 2))), Tensor(rng.normal(size=(2, 2))))
    np.testing.assert_array_equal(out.data, np.zeros((2, 2)))


def test_matmul_shape_mismatch_names_both_shapes():
    with pytest.raises(DimensionError) as exc:
        matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 2))))
    assert "(2, 3)" in str(exc.value) and "(2, 2)" in str(exc.value)


def test_elementwise_values():
    np.testing.assert_array_equal(elementwise("sigmoid", Tensor([0.0, 0.0])).data, [0.5, 0.5])
    np.testing.assert_array_equal(elementwise("tanh", Tensor([0.0])).data, [0.0])
    np.testing.assert_array_equal(elementwise("hadamard", Tensor([1.0, 2, 3]), Tensor([4.0, 5, 6])).data,
                                  [4, 10, 18])


@pytest.mark.parametrize("op", ["hadamard", "add"])
def test_elementwise_binary_needs_same_shape(op):
    with pytest.raises(DimensionError):
        elementwise(op, Tensor([1.0, 2.0]), Tensor([[1.0, 2.0]]))


def test_elementwise_unknown_op():
    with pytest.raises(ContractError):
        elementwise("softplus", Tensor([1.0]))


def test_sigmoid_stays_finite_for_large_inputs():
    out = sigmoid(Tensor([-1000.0, 1000.0]))
    np.testing.assert_array_equal(out.data, [0.0, 1.0])


@pytest.mark.parametrize("k,label,expected", [(2, 1, np.log(2)), (10, 7, np.log(10))])
def test_cross_entropy_uniform_logits(k, label, expected):
    loss = softmax_cross_entropy(Tensor(np.zeros((1, k))), [label])
    assert loss.item() == pytest.approx(expected, abs=1e-12)


def test_cross_entropy_scalar_oracle():
    loss = softmax_cross_entropy(Tensor([[2.0, 0.0]]), [0])
    assert loss.item() == pytest.approx(0.126928, abs=1e-6)


def test_cross_entropy_label_out_of_range():
    with pytest.raises(LabelIndexError):
        softmax_cross_entropy(Tensor(np.zeros((2, 3))), [0, 3])
    with pytest.raises(IndexError):
        softmax_cross_entropy(Tensor(np.zeros((1, 3))), [-1])


def test_backward_constant_loss_gives_zero_gradient():
    w = Tensor([1.0, 2.0], requires_grad=True)
    with GradTape() as tape:
        loss = tsum(Tensor([3.0, 4.0]))
        grads = backward(loss, tape)
    np.testing.assert_array_equal(grads[w], [0.0, 0.0])


def test_backward_sum_of_squares():
    w = Tensor([1.0, 2.0], requires_grad=True)
    with GradTape() as tape:
        grads = backward(tsum(square(w)), tape)
    np.testing.assert_array_equal(grads[w], [2.0, 4.0])


def test_backward_accumulates_over_consumers():
    w = Tensor([1.5, -2.0], requires_grad=True)
    with GradTape() as tape:
        loss = add(tsum(mul(w, w)), tsum(add(w, w)))
        grads = backward(loss, tape)
    np.testing.assert_allclose(grads[w], 2 * w.data + 2.0, rtol=0, atol=1e-15)


def test_backward_rejects_non_scalar_and_non_finite():
    w = Tensor([1.0, 2.0], requires_grad=True)
    with GradTape() as tape:
        with pytest.raises(ContractError):
            backward(square(w), tape)
        with pytest.raises(NonFiniteError):
            backward(tsum(mul(w, np.inf)), tape)


def test_backward_needs_a_tape():
    w = Tensor([1.0], requires_grad=True)
    loss = tsum(square(w))
    with pytest.raises(ContractError):
        backward(loss)


def test_finite_difference_quadratic():
    assert finite_difference_check(lambda x: tsum(square(x)), np.array([3.0]), eps=1e-6) < 1e-8


def test_finite_difference_constant_is_zero():
    assert finite_difference_check(lambda x: tsum(Tensor([1.0, 2.0])), np.array([0.3, 0.4])) == 0.0


def test_finite_difference_rejects_non_finite():
    with pytest.raises(OracleError):
        finite_difference_check(lambda x: mul(tsum(x), np.nan), np.array([1.0]))


def _random_weights(rng, shape):
    return Tensor(rng.normal(size=shape))


PRIMITIVES = {
    "matmul": (lambda p: matmul(p["a"], p["b"]), {"a": (3, 4), "b": (4, 2)}),
    "transpose": (lambda p: transpose(p["a"]), {"a": (3, 2)}),
    "add_broadcast": (lambda p: add(p["a"], p["b"]), {"a": (3, 4), "b": (4,)}),
    "sub": (lambda p: sub(p["a"], p["b"]), {"a": (2, 3), "b": (2, 3)}),
    "mul": (lambda p: mul(p["a"], p["b"]), {"a": (2, 3), "b": (2, 3)}),
    "hadamard": (lambda p: hadamard(p["a"], p["b"]), {"a": (5,), "b": (5,)}),
    "sigmoid": (lambda p: sigmoid(p["a"]), {"a": (2, 3)}),
    "tanh": (lambda p: tanh(p["a"]), {"a": (2, 3)}),
    "relu": (lambda p: relu(p["a"]), {"a": (2, 3)}),
    "square": (lambda p: square(p["a"]), {"a": (4,)}),
    "mean": (lambda p: reshape(mean(p["a"]), (1,)), {"a": (2, 3)}),
    "reshape": (lambda p: reshape(p["a"], (3, 2)), {"a": (2, 3)}),
    "take": (lambda p: take(p["a"], (slice(0, 2), slice(1, 3))), {"a": (3, 3)}),
    "concat": (lambda p: concat([p["a"], p["b"]], axis=1), {"a": (2, 1), "b": (2, 3)}),
    "tile_rows": (lambda p: tile_rows(p["a"], 3), {"a": (4,)}),
}


@pytest.mark.parametrize("name", sorted(PRIMITIVES))
def test_primitive_gradients_match_finite_differences(name):
    rng = np.random.default_rng(zlib.crc32(name.encode()))
    fn, shapes = PRIMITIVES[name]
    params = {k: rng.normal(size=s) for k, s in shapes.items()}
    out_shape = fn({k: Tensor(v) for k, v in params.items()}).shape
    weights = _random_weights(rng, out_shape)
    err = finite_difference_check(lambda p: tsum(mul(fn(p), weights)), params, eps=1e-6)
    assert err <= 1e-5


def test_cross_entropy_gradient_matches_finite_differences(rng):
    labels = np.array([0, 2, 1, 2])
    err = finite_difference_check(lambda x: softmax_cross_entropy(x, labels), rng.normal(size=(4, 3)))
    assert err <= 1e-5


def test_tensors_are_immutable():
    t = Tensor([1.0, 2.0])
    with pytest.raises(ValueError):
        t.data[0] = 5.0


def test_untracked_ops_record_nothing():
    w = Tensor([1.0, 2.0])
    with GradTape() as tape:
        tsum(square(w))
    assert len(tape) == 0
