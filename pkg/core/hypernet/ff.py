"""
Chunked feed-forward hypernetwork (HNET).

Every chunk is MLP(concat(e, c_j)); chunks share weights but never each other's inputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from core.errors import DimensionError
from core.tensor import Tensor, add, as_tensor, concat, matmul, relu, reshape, tile_rows

HNET_PREFIX = "hnet."
FF_KEYS = ("W1", "b1", "W2", "b2", "W3", "b3")


@dataclass(frozen=True)
class FfHypernetParams:
    W1: Tensor  # (d_e + d_c, h1)
    b1: Tensor
    W2: Tensor  # (h1, h2)
    b2: Tensor
    W3: Tensor  # (h2, chunk_size)
    b3: Tensor

    @classmethod
    def from_view(cls, view: Mapping[str, Tensor]) -> "FfHypernetParams":
        return cls(**{k: as_tensor(view[HNET_PREFIX + k]) for k in FF_KEYS})

    @property
    def input_dim(self) -> int:
        return self.W1.shape[0]

    @property
    def chunk_size(self) -> int:
        return self.W3.shape[1]


def _mlp_rows(x: Tensor, P: FfHypernetParams) -> Tensor:
    out = relu(add(matmul(x, P.W1), P.b1))
    out = relu(add(matmul(out, P.W2), P.b2))
    return add(matmul(out, P.W3), P.b3)


def hnet_generate_chunk(e, c_j, P: FfHypernetParams) -> Tensor:
    """
    One chunk of main-network weights.

    Args:
        e (Tensor): Task embedding (d_e,).
        c_j (Tensor): Chunk embedding (d_c,).
        P (FfHypernetParams): Generator weights.

    Returns:
        Tensor: Chunk vector (chunk_size,).
    """
    e, c_j = as_tensor(e), as_tensor(c_j)
    if e.data.ndim != 1 or c_j.data.ndim != 1 or e.size + c_j.size != P.input_dim:
        raise DimensionError(f"hnet input {e.shape} + {c_j.shape} does not match W1 {P.W1.shape}")
    x = reshape(concat([e, c_j]), (1, P.input_dim))
    return reshape(_mlp_rows(x, P), (P.chunk_size,))


def hnet_generate_all(e, chunk_embeddings, P: FfHypernetParams) -> Tensor:
    """All chunks in one batched pass; row j equals hnet_generate_chunk(e, c_j)."""
    e, C = as_tensor(e), as_tensor(chunk_embeddings)
    if e.data.ndim != 1 or C.data.ndim != 2 or e.size + C.shape[1] != P.input_dim:
        raise DimensionError(f"hnet input {e.shape} + {C.shape} does not match W1 {P.W1.shape}")
    X = concat([tile_rows(e, C.shape[0]), C], axis=1)
    return _mlp_rows(X, P)


def ff_param_count(d_in: int, hidden: int, chunk_size: int) -> int:
    return d_in * hidden + hidden + hidden * hidden + hidden + hidden * chunk_size + chunk_size


def fit_hnet_hidden(d_in: int, chunk_size: int, budget: int) -> int:
    """Largest equal hidden width whose generator count stays within `budget` (at least 1)."""
    hidden = 1
    while ff_param_count(d_in, hidden + 1, chunk_size) <= budget:
        hidden += 1
    return hidden


def init_ff_weights(rng: np.random.Generator, d_in: int, hidden: int, chunk_size: int) -> dict[str, np.ndarray]:
    shapes = {"W1": (d_in, hidden), "W2": (hidden, hidden), "W3": (hidden, chunk_size)}
    weights = {}
    for k in FF_KEYS:
        if k.startswith("W"):
            fan_in = shapes[k][0]
            bound = 1.0 / np.sqrt(fan_in)
            weights[HNET_PREFIX + k] = rng.uniform(-bound, bound, size=shapes[k])
        else:
            width = shapes["W" + k[1]][1]
            weights[HNET_PREFIX + k] = np.zeros(width)
    return weights
