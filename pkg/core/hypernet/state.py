"""
Hypernetwork State - everything a training run mutates

Responsibilities:
- Hold generator weights, embeddings, the GROW bank, frozen names, snapshot and Fisher diagonals
- Initialise a fresh generator for a layout
- Task lifecycle: begin_task (new embedding), finish_task (freeze what the task owned)
- Wrap arrays into Tensors for one forward pass (TensorView)

Every array is addressed by a dotted name:
    hnet.W1 .. hnet.b3            feed-forward generator
    lstm.w_i .. lstm.W_out        LSTM generator (GROW keeps only lstm.u_* here)
    grow.{t}.w_i .. grow.{t}.W_out  GROW per-task weights
    emb.chunk, emb.task.{t}       embeddings
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Iterable, Mapping

import numpy as np

from config.settings import EMBEDDING_DIM, EMBEDDING_INIT_STD, LSTM_HIDDEN
from core.errors import ContractError, RegistryError
from core.hypernet.embeddings import CHUNK_KEY, EmbeddingBank, task_key
from core.hypernet.ff import fit_hnet_hidden, init_ff_weights
from core.hypernet.grow import GrowBank
from core.hypernet.layout import MainNetLayout
from core.hypernet.lstm import (LSTM_PREFIX, init_input_weights, init_recurrent_weights,
                                lstm_param_count)
from core.tensor import Tensor, add
from utils.logger import get_logger
from utils.seeding import derive_rng

if TYPE_CHECKING:
    from core.regularization import FisherDiag, HypernetSnapshot

logger = get_logger(__name__)

GENERATORS = ("hnet", "lstm", "grow")


@dataclass(frozen=True)
class HypernetDims:
    embedding_dim: int = EMBEDDING_DIM
    chunk_embedding_dim: int = EMBEDDING_DIM
    hidden_size: int = LSTM_HIDDEN
    hnet_hidden: int = 0  # 0 -> fitted to the LSTM generator's count
    gate_bias: bool = False
    share_output: bool = False

    @property
    def input_dim(self) -> int:
        return self.embedding_dim + self.chunk_embedding_dim


class TensorView(Mapping):
    """
    Read-only Tensor wrapping of a name -> array mapping.

    Arrays are copied into Tensors on first access. Names in `trainable` become
    gradient leaves; names in `deltas` are returned as leaf + constant delta.
    """

    def __init__(self, arrays: Mapping[str, np.ndarray], trainable: Iterable[str] = (),
                 deltas: Mapping[str, np.ndarray] | None = None):
        self._arrays = arrays
        self._trainable = set(trainable)
        self._deltas = deltas or {}
        self._values: dict[str, Tensor] = {}
        self.leaves: dict[str, Tensor] = {}

    def __getitem__(self, name: str) -> Tensor:
        if name not in self._values:
            leaf = Tensor(self._arrays[name], requires_grad=name in self._trainable, name=name)
            self.leaves[name] = leaf
            delta = self._deltas.get(name)
            self._values[name] = leaf if delta is None else add(leaf, Tensor(delta))
        return self._values[name]

    def __contains__(self, name) -> bool:
        return name in self._arrays

    def __iter__(self):
        return iter(self._arrays)

    def __len__(self):
        return len(self._arrays)


@dataclass
class HypernetState:
    generator: str
    layout: MainNetLayout
    dims: HypernetDims
    weights: dict[str, np.ndarray]
    embeddings: EmbeddingBank
    seed: int = 0
    grow: GrowBank | None = None
    frozen: set[str] = field(default_factory=set)
    finished: list[int] = field(default_factory=list)
    snapshot: "HypernetSnapshot | None" = None
    fishers: dict[int, "FisherDiag"] = field(default_factory=dict)

    def arrays(self) -> dict[str, np.ndarray]:
        """Every live array by name (references, not copies)."""
        out = dict(self.weights)
        out.update(self.embeddings.arrays())
        if self.grow is not None:
            out.update(self.grow.arrays())
        return out

    def view(self, trainable: Iterable[str] = (), deltas: Mapping[str, np.ndarray] | None = None) -> TensorView:
        return TensorView(self.arrays(), trainable, deltas)

    def task_ids(self) -> list[int]:
        return self.embeddings.task_ids()

    def begin_task(self, task: int) -> np.ndarray:
        """Draws e^task ~ N(0, 1) * 0.1; tasks open strictly in order."""
        if task in self.embeddings.task:
            raise RegistryError(f"Task {task} already begun")
        if task > 1 and task - 1 not in self.finished:
            raise ContractError(f"Task {task} cannot start before task {task - 1} is finished")
        rng = derive_rng(self.seed, "task-embedding", task)
        return self.embeddings.add_task(task, rng, self.dims.embedding_dim, EMBEDDING_INIT_STD)

    def finish_task(self, task: int):
        """Freezes what only this task may change: its embedding and, for GROW, its weights."""
        self.embeddings.get_task(task)
        self.frozen.add(task_key(task))
        if self.grow is not None:
            self.frozen.update(self.grow.names(task))
        if task not in self.finished:
            self.finished.append(task)

    def trainable_groups(self, task: int) -> tuple[list[str], list[str]]:
        """
        Parameter groups for training `task`.

        Returns:
            tuple: (names updated with the total loss, names updated with the task loss only)
        """
        self.embeddings.get_task(task)
        if self.generator == "grow":
            shared = self.grow.names(task) + list(self.weights) + [CHUNK_KEY]
        else:
            shared = list(self.weights) + [CHUNK_KEY]
        return [n for n in shared if n not in self.frozen], [task_key(task)]


def init_state(generator: str, layout: MainNetLayout, dims: HypernetDims | None = None, seed: int = 0) -> HypernetState:
    """
    Builds a freshly initialised generator for `layout`.

    Matrices are drawn from uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases start
    at zero (forget gate at FORGET_BIAS when enabled), chunk embeddings from
    N(0, 1) * 0.1. Task embeddings are added by begin_task.

    Args:
        generator (str): "hnet", "lstm" or "grow".
        layout (MainNetLayout): Main network to generate.
        dims (HypernetDims): Embedding and hidden sizes.
        seed (int): Master seed.

    Returns:
        HypernetState
    """
    if generator not in GENERATORS:
        raise ContractError(f"Unknown generator '{generator}', expected one of {GENERATORS}")
    dims = dims or HypernetDims()
    rng = derive_rng(seed, "init", generator)
    d_in, d_h, chunk = dims.input_dim, dims.hidden_size, layout.chunk_size
    grow = None

    if generator == "hnet":
        hidden = dims.hnet_hidden or fit_hnet_hidden(d_in, chunk, lstm_param_count(d_in, d_h, chunk, dims.gate_bias))
        dims = replace(dims, hnet_hidden=hidden)
        weights = init_ff_weights(rng, d_in, hidden, chunk)
    else:
        weights = {LSTM_PREFIX + k: v for k, v in init_recurrent_weights(rng, d_h).items()}
        if generator == "lstm":
            own = init_input_weights(rng, d_in, d_h, chunk, gate_bias=dims.gate_bias)
            weights.update({LSTM_PREFIX + k: v for k, v in own.items()})
        else:
            grow = GrowBank()
            if dims.share_output:
                shared = init_input_weights(rng, d_in, d_h, chunk, with_output=True)
                weights[LSTM_PREFIX + "W_out"] = shared["W_out"]

    chunk_embeddings = rng.standard_normal((layout.n_chunks, dims.chunk_embedding_dim)) * EMBEDDING_INIT_STD
    state = HypernetState(generator, layout, dims, weights, EmbeddingBank(chunk_embeddings), seed=seed, grow=grow)
    logger.debug(f"[TRAIN] Initialised {generator} generator | n_c={layout.n_chunks} "
                 f"| chunk_size={chunk} | params={count_hypernet_params(state)}")
    return state


def count_hypernet_params(state: HypernetState) -> int:
    """Trainable hypernetwork scalars, embeddings and GROW task weights included."""
    return int(sum(a.size for a in state.arrays().values()))

