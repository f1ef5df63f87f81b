import os
import tempfile

os.environ.setdefault("HNETCL_LOG_DIR", tempfile.mkdtemp(prefix="hnetcl-logs-"))

import numpy as np  # noqa: E402
import pytest  # noqa: E402

from core.hypernet.layout import build_layout  # noqa: E402
from core.hypernet.state import HypernetDims, init_state  # noqa: E402
from core.scenario import Scenario  # noqa: E402
from core.target_network import ClassifierSpec  # noqa: E402
from data.task_sequences import synth_blobs  # noqa: E402

SMALL_DIMS = HypernetDims(embedding_dim=3, chunk_embedding_dim=3, hidden_size=4)


def make_state(generator="lstm", scenario=Scenario.CL1, n_tasks=2, chunk_size=7, hidden=(4,), input_dim=3,
               n_classes=2, seed=0, dims=SMALL_DIMS):
    spec = ClassifierSpec.for_scenario(input_dim, hidden, n_classes, scenario, n_tasks)
    layout = build_layout(spec, scenario, n_tasks, chunk_size)
    return init_state(generator, layout, dims, seed)


def open_tasks(state, n):
    """Begins and finishes tasks 1..n without training."""
    for t in range(1, n + 1):
        state.begin_task(t)
        state.finish_task(t)
    return state


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture
def state_factory():
    return make_state


@pytest.fixture
def tiny_tasks():
    return synth_blobs(n_tasks=3, n_classes=2, dim=3, separation=4.0, seed=0, samples_per_class=20)


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run full synthetic training runs")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip = pytest.mark.skip(reason="full training run; pass --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)
