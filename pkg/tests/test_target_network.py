import numpy as np
import pytest

from core.errors import ContractError, RegistryError
from core.hypernet.layout import build_layout
from core.scenario import Scenario
from core.target_network import SHARED_HEAD, ClassifierSpec, forward, predictive_entropy
from core.tensor import Tensor


def _toy_spec():
    return ClassifierSpec(1, (1,), ((1, 1),))


def _toy_theta():
    return {
        "layer1.weight": Tensor([[2.0]]),
        "layer1.bias": Tensor([-1.0]),
        "head1.weight": Tensor([[3.0]]),
        "head1.bias": Tensor([0.5]),
    }


def test_split_mnist_cl1_parameter_count():
    spec = ClassifierSpec.for_scenario(784, (400, 400), 2, Scenario.CL1, 5)
    layout = build_layout(spec, Scenario.CL1, 5, 4000)
    assert layout.total_params == 478410
    assert layout.n_chunks == 120


def test_cl2_uses_one_shared_head():
    spec = ClassifierSpec.for_scenario(784, (400, 400), 2, Scenario.CL2, 5)
    assert spec.head_ids() == [SHARED_HEAD]
    assert build_layout(spec, Scenario.CL2, 5, 4000).total_params == 475202


def test_layout_rejects_head_scenario_mismatch():
    spec = ClassifierSpec.for_scenario(4, (3,), 2, Scenario.CL1, 2)
    with pytest.raises(ContractError):
        build_layout(spec, Scenario.CL2, 2, 10)


def test_zero_parameters_give_zero_logits(rng):
    spec = ClassifierSpec.for_scenario(3, (4,), 2, Scenario.CL1, 2)
    theta = {name: Tensor(np.zeros(shape)) for name, shape in spec.parameter_shapes()}
    logits = forward(rng.normal(size=(5, 3)), theta, spec, 2)
    np.testing.assert_array_equal(logits.data, np.zeros((5, 2)))


def test_toy_network_hand_computed():
    logits = forward(np.array([[2.0], [0.0]]), _toy_theta(), _toy_spec(), 1)
    # relu(2*2 - 1) * 3 + 0.5 and relu(-1) * 3 + 0.5
    np.testing.assert_allclose(logits.data, [[9.5], [0.5]], rtol=0, atol=1e-15)


def test_output_bias_shift_is_linear(rng):
    spec = ClassifierSpec.for_scenario(3, (4,), 2, Scenario.CL1, 1)
    arrays = {name: rng.normal(size=shape) for name, shape in spec.parameter_shapes()}
    x = rng.normal(size=(4, 3))
    base = forward(x, {k: Tensor(v) for k, v in arrays.items()}, spec, 1).data
    arrays["head1.bias"] = arrays["head1.bias"] + 0.25
    shifted = forward(x, {k: Tensor(v) for k, v in arrays.items()}, spec, 1).data
    np.testing.assert_allclose(shifted - base, 0.25, atol=1e-12)


def test_unknown_head():
    with pytest.raises(RegistryError):
        forward(np.zeros((1, 1)), _toy_theta(), _toy_spec(), 2)


def test_entropy_examples():
    assert predictive_entropy(np.zeros(10)) == pytest.approx(np.log(10), abs=1e-12)
    assert predictive_entropy(np.array([1000.0, 0.0])) == pytest.approx(0.0, abs=1e-10)
    assert predictive_entropy(np.array([1.0, 0.0])) == pytest.approx(0.582203, abs=1e-6)


def test_entropy_bounds(rng):
    logits = rng.normal(scale=5.0, size=(50, 7))
    h = predictive_entropy(logits)
    assert h.shape == (50,)
    assert np.all(h >= 0.0)
    assert np.all(h <= np.log(7) + 1e-12)
