import json

import numpy as np
import pytest

from conftest import make_state, open_tasks
from core.errors import FormatError
from core.hypernet.generate import generate_for_task
from core.hypernet.grow import grow_begin_task
from core.regularization import FisherDiag, HypernetSnapshot
from core.state_manager import load_checkpoint, save_checkpoint


def test_checkpoint_restores_state_bitwise(tmp_path):
    state = open_tasks(make_state("lstm"), 2)
    state.snapshot = HypernetSnapshot.capture(state, 2)
    state.fishers[1] = FisherDiag(1, np.linspace(0.5, 1.5, state.layout.total_params), 0.25, 16)
    path = str(tmp_path / "ckpt" / "state.npz")
    save_checkpoint(path, state)
    loaded = load_checkpoint(path)

    assert loaded.generator == "lstm"
    assert loaded.layout == state.layout
    assert loaded.dims == state.dims
    assert loaded.frozen == state.frozen
    assert loaded.finished == [1, 2]
    assert set(loaded.arrays()) == set(state.arrays())
    for name, arr in state.arrays().items():
        np.testing.assert_array_equal(loaded.arrays()[name], arr)
    for name, arr in state.snapshot.arrays.items():
        np.testing.assert_array_equal(loaded.snapshot.arrays[name], arr)
    np.testing.assert_array_equal(loaded.fishers[1].values, state.fishers[1].values)
    assert loaded.fishers[1].scale == 0.25
    np.testing.assert_array_equal(generate_for_task(loaded, 2).flat.data, generate_for_task(state, 2).flat.data)


def test_grow_checkpoint(tmp_path):
    state = make_state("grow")
    grow_begin_task(state, 1)
    state.finish_task(1)
    path = str(tmp_path / "grow.npz")
    save_checkpoint(path, state)
    loaded = load_checkpoint(path)
    assert loaded.grow.task_ids() == [1]
    np.testing.assert_array_equal(generate_for_task(loaded, 1).flat.data, generate_for_task(state, 1).flat.data)


def test_foreign_format_tag(tmp_path):
    path = tmp_path / "other.npz"
    np.savez(path, __meta__=np.array(json.dumps({"format": "something-else/2"})))
    with pytest.raises(FormatError, match="format tag"):
        load_checkpoint(str(path))


def test_not_an_archive(tmp_path):
    path = tmp_path / "junk.npz"
    path.write_bytes(b"definitely not a zip file")
    with pytest.raises(FormatError):
        load_checkpoint(str(path))
