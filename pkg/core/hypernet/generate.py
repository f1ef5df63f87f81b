from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from core.errors import ContractError, LayoutError, RegistryError
from core.hypernet.embeddings import CHUNK_KEY, task_key
from core.hypernet.ff import FfHypernetParams, hnet_generate_all
from core.hypernet.grow import grow_key
from core.hypernet.layout import MainNetLayout
from core.hypernet.lstm import LstmHypernetParams, lstm_generate_all
from core.hypernet.state import HypernetState
from core.tensor import Tensor, as_tensor, reshape, take


@dataclass(frozen=True)
class GeneratedParams:
    """Main-network parameters as one flat vector plus the structured views into it."""

    flat: Tensor
    tensors: dict[str, Tensor]

    def numpy(self) -> dict[str, np.ndarray]:
        return {name: t.data for name, t in self.tensors.items()}


def generate_chunks(e, P: Mapping[str, Tensor], mode: str, task: int | None = None) -> Tensor:
    """Chunk matrix (n_c, chunk_size) for one task embedding."""
    C = P[CHUNK_KEY]
    if mode == "hnet":
        return hnet_generate_all(e, C, FfHypernetParams.from_view(P))
    if mode == "lstm":
        return lstm_generate_all(e, C, LstmHypernetParams.from_view(P))
    if mode == "grow":
        if task is None:
            raise ContractError("grow generation needs a task id")
        if grow_key(task, "w_i") not in P:
            raise RegistryError(f"No GROW weights for task {task}")
        return lstm_generate_all(e, C, LstmHypernetParams.from_view(P, task=task))
    raise ContractError(f"Unknown generation mode '{mode}'")


def generate_main_params(e, P: Mapping[str, Tensor], layout: MainNetLayout, mode: str,
                         task: int | None = None) -> GeneratedParams:
    """
    Generates the full main-network parameter set.

    Args:
        e (Tensor): Task embedding.
        P (Mapping[str, Tensor]): Generator tensors and "emb.chunk", e.g. a TensorView.
        layout (MainNetLayout): Flattening order and chunk size.
        mode (str): "hnet", "lstm" or "grow" (needs `task`).
        task (int): Task whose GROW weights to use.

    Returns:
        GeneratedParams: Concatenated chunks truncated to total_params, unflattened per layout.
    """
    C = as_tensor(P[CHUNK_KEY])
    if C.shape[0] != layout.n_chunks:
        raise LayoutError(f"{C.shape[0]} chunk embeddings for a layout with n_c={layout.n_chunks}")
    chunks = generate_chunks(e, P, mode, task)
    if chunks.shape[1] != layout.chunk_size:
        raise LayoutError(f"generator emits chunks of {chunks.shape[1]}, layout expects {layout.chunk_size}")
    flat = reshape(chunks, (layout.n_chunks * layout.chunk_size,))
    if flat.size != layout.total_params:
        flat = take(flat, slice(0, layout.total_params))
    return GeneratedParams(flat, layout.unflatten_tensor(flat))


def generate_for_task(state: HypernetState, task: int, view: Mapping[str, Tensor] | None = None) -> GeneratedParams:
    """Θ_m for `task` from the live state (or from `view`, e.g. with trainable leaves)."""
    view = view if view is not None else state.view()
    key = task_key(task)
    if key not in view:
        raise RegistryError(f"No task embedding for task {task}")
    return generate_main_params(view[key], view, state.layout, state.generator, task)
