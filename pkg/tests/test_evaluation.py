import numpy as np
import pytest

from conftest import make_state, open_tasks
from core.errors import ContractError
from core.evaluation import AccuracyRow, MetricsRecord, compression_ratio, evaluate, infer_task, infer_tasks
from core.hypernet.generate import generate_for_task
from core.hypernet.layout import MainNetLayout, build_layout
from core.hypernet.state import count_hypernet_params, init_state
from core.scenario import Scenario
from core.target_network import ClassifierSpec, forward, predictive_entropy
from data.task_sequences import Dataset


def _silenced(scenario):
    """Two finished tasks whose generated networks are all zeros."""
    state = open_tasks(make_state("lstm", scenario=scenario), 2)
    state.weights["lstm.W_out"][...] = 0.0
    return state


def _test_sets(seq):
    return {t: seq.task(t).test for t in (1, 2)}


def test_cl1_constant_classifier_scores_the_class_share(tiny_tasks):
    rows = evaluate(Scenario.CL1, _silenced(Scenario.CL1), _test_sets(tiny_tasks), 2)
    assert [(r.stage, r.eval_task) for r in rows] == [(2, 1), (2, 2)]
    assert [r.accuracy for r in rows] == [0.5, 0.5]


def test_cl2_constant_classifier(tiny_tasks):
    rows = evaluate(Scenario.CL2, _silenced(Scenario.CL2), _test_sets(tiny_tasks), 2)
    assert [r.accuracy for r in rows] == [0.5, 0.5]


def test_cl3_needs_task_and_class(tiny_tasks):
    # identical candidates tie, so every sample is routed to task 1
    rows = evaluate(Scenario.CL3, _silenced(Scenario.CL3), _test_sets(tiny_tasks), 2)
    assert [r.accuracy for r in rows] == [0.5, 0.0]


def test_inference_matches_brute_force(tiny_tasks):
    state = open_tasks(make_state("lstm", scenario=Scenario.CL3), 2)
    spec = state.layout.spec
    x = tiny_tasks.task(1).test.images
    entropies = [predictive_entropy(forward(x, generate_for_task(state, t).tensors, spec, t).data) for t in (1, 2)]
    expected = np.where(entropies[1] < entropies[0], 2, 1)
    np.testing.assert_array_equal(infer_tasks(x, state, [1, 2]), expected)
    assert infer_task(x[0], state, [2, 1]) == expected[0]


def test_single_candidate_is_returned():
    state = open_tasks(make_state("lstm", scenario=Scenario.CL3), 2)
    assert infer_task(np.zeros(3), state, [2]) == 2


def test_ties_go_to_the_lowest_id():
    state = open_tasks(make_state("lstm", scenario=Scenario.CL2), 2)
    state.embeddings.task[2][...] = state.embeddings.task[1]
    np.testing.assert_array_equal(infer_tasks(np.ones((4, 3)), state, [2, 1]), [1, 1, 1, 1])


def test_evaluation_follows_training_order(tiny_tasks):
    state = open_tasks(make_state("lstm"), 1)
    with pytest.raises(ContractError):
        evaluate(Scenario.CL1, state, _test_sets(tiny_tasks), 2)


def test_empty_test_split():
    state = open_tasks(make_state("lstm"), 1)
    empty = Dataset(np.zeros((0, 3)), np.zeros(0, dtype=np.int64), "test")
    with pytest.raises(ContractError):
        evaluate(Scenario.CL1, state, {1: empty}, 1)


# ---------- metrics ----------

def _record():
    record = MetricsRecord("lstm_net", "cl1")
    record.record([AccuracyRow(1, 1, 0.9)])
    record.record([AccuracyRow(2, 1, 0.8), AccuracyRow(2, 2, 0.95)])
    return record


def test_metrics_from_accuracy_matrix():
    record = _record()
    assert record.final() == {1: 0.8, 2: 0.95}
    assert record.during() == {1: 0.9, 2: 0.95}
    assert record.forgetting()[1] == pytest.approx(0.1, abs=1e-12)
    assert record.forgetting()[2] == 0.0
    assert record.avg_final() == pytest.approx(0.875, abs=1e-12)
    assert record.avg_forgetting() == pytest.approx(0.1, abs=1e-12)
    assert len(record.rows()) == 3


def test_metrics_reject_out_of_order_stages():
    record = MetricsRecord("lstm_net", "cl1")
    with pytest.raises(ContractError):
        record.record([AccuracyRow(2, 1, 0.5), AccuracyRow(2, 2, 0.5)])
    record.record([AccuracyRow(1, 1, 0.5)])
    with pytest.raises(ContractError):
        record.record([AccuracyRow(2, 2, 0.5)])


def test_single_task_has_no_forgetting():
    record = MetricsRecord("hnet", "cl1")
    record.record([AccuracyRow(1, 1, 0.7)])
    assert record.avg_forgetting() == 0.0


# ---------- compression ----------

def test_compression_of_equal_sizes_is_one():
    state = make_state("lstm")
    layout = MainNetLayout((("w", (count_hypernet_params(state),)),), 4)
    assert compression_ratio(state, layout) == 1.0


def test_default_split_mnist_lstm_compresses():
    spec = ClassifierSpec.for_scenario(784, (400, 400), 2, Scenario.CL1, 5)
    state = init_state("lstm", build_layout(spec, Scenario.CL1, 5, 4000), seed=0)
    open_tasks(state, 5)
    expected = 4 * 64 * 192 + 4 * 64 * 64 + 64 * 4000 + 120 * 96 + 5 * 96
    assert count_hypernet_params(state) == expected
    assert compression_ratio(state) == pytest.approx(expected / 478410)
    assert compression_ratio(state) < 1.0
