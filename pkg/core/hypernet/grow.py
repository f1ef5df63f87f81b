"""
LSTM_NET_GROW: per-task gate input weights and output projection on top of a
recurrent core that is frozen once the first task is learned.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from core.errors import ContractError, RegistryError
from core.hypernet.embeddings import CHUNK_KEY
from core.hypernet.lstm import LSTM_PREFIX, RECURRENT_KEYS, init_input_weights
from utils.logger import get_logger
from utils.seeding import derive_rng

if TYPE_CHECKING:
    from core.hypernet.state import HypernetState

logger = get_logger(__name__)


def grow_key(task: int, short: str) -> str:
    return f"grow.{int(task)}.{short}"


@dataclass
class GrowBank:
    tasks: dict[int, dict[str, np.ndarray]] = field(default_factory=dict)

    def __contains__(self, task) -> bool:
        return task in self.tasks

    def task_ids(self) -> list[int]:
        return sorted(self.tasks)

    def store(self, task: int, arrays: dict[str, np.ndarray]):
        if task in self.tasks:
            raise RegistryError(f"GROW weights for task {task} already stored")
        self.tasks[task] = {k: np.array(v, dtype=np.float64) for k, v in arrays.items()}

    def task_arrays(self, task: int) -> dict[str, np.ndarray]:
        if task not in self.tasks:
            raise RegistryError(f"No GROW weights for task {task}; known {self.task_ids()}")
        return self.tasks[task]

    def arrays(self) -> dict[str, np.ndarray]:
        return {grow_key(t, k): v for t in self.task_ids() for k, v in self.tasks[t].items()}

    def names(self, task: int) -> list[str]:
        return [grow_key(task, k) for k in self.task_arrays(task)]


def grow_added_params(d_in: int, d_h: int, chunk_size: int, embedding_dim: int,
                      share_output: bool = False, gate_bias: bool = False) -> int:
    """Scalars a new task adds: its gate input weights, output projection and embedding."""
    added = 4 * d_h * d_in + embedding_dim
    if not share_output:
        added += d_h * chunk_size
    if gate_bias:
        added += 4 * d_h
    return added


def grow_begin_task(state: "HypernetState", task: int) -> GrowBank:
    """
    Opens task `task` for the GROW generator.

    Task 1 draws fresh gate input weights; every later task starts from a copy
    of the previous task's values and freezes the recurrent core and the chunk
    embeddings. A new task embedding is drawn either way.

    Args:
        state (HypernetState): State with generator "grow".
        task (int): 1-based task id.

    Returns:
        GrowBank: The bank now holding the task's weights.
    """
    if state.generator != "grow":
        raise ContractError(f"grow_begin_task needs a grow state, got '{state.generator}'")
    bank = state.grow
    if task in bank:
        raise RegistryError(f"GROW task {task} already begun")
    dims, chunk_size = state.dims, state.layout.chunk_size

    state.begin_task(task)
    if task == 1:
        rng = derive_rng(state.seed, "grow", task)
        arrays = init_input_weights(rng, dims.input_dim, dims.hidden_size, chunk_size,
                                    gate_bias=dims.gate_bias, with_output=not dims.share_output)
    else:
        arrays = {k: v.copy() for k, v in bank.task_arrays(task - 1).items()}
        shared = [LSTM_PREFIX + k for k in RECURRENT_KEYS] + [CHUNK_KEY]
        if dims.share_output:
            shared.append(LSTM_PREFIX + "W_out")
        state.frozen.update(shared)
    bank.store(task, arrays)

    logger.info(f"[GROW] Task {task} opened | task weights {sum(a.size for a in arrays.values())} "
                f"| frozen {len(state.frozen)} tensors")
    return bank
