"""
Dependency-preserving LSTM hypernetwork (LSTM_NET).

Chunks are produced in order j = 1..n_c. The hidden and cell states run through
every chunk, so chunk j depends on the embeddings of chunks 1..j:

    i, f, o = sigmoid(w x_j + u h_{j-1}),  g = tanh(w_g x_j + u_g h_{j-1})
    s_j = f * s_{j-1} + i * g,  h_j = o * tanh(s_j),  chunk_j = h_j W_out

with x_j = concat(e, c_j) and h_0 = s_0 = 0. Gate biases are off unless enabled.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from config.settings import FORGET_BIAS
from core.errors import DimensionError
from core.tensor import (Tensor, add, as_tensor, concat, hadamard, matmul, reshape, sigmoid, take, tanh,
                         tile_rows, transpose)

LSTM_PREFIX = "lstm."
GATES = ("i", "f", "o", "g")
INPUT_KEYS = tuple(f"w_{g}" for g in GATES)
RECURRENT_KEYS = tuple(f"u_{g}" for g in GATES)
BIAS_KEYS = tuple(f"b_{g}" for g in GATES)


@dataclass(frozen=True)
class LstmHypernetParams:
    w: tuple[Tensor, ...]  # w_i, w_f, w_o, w_g: (d_h, d_in)
    u: tuple[Tensor, ...]  # u_i, u_f, u_o, u_g: (d_h, d_h)
    W_out: Tensor  # (d_h, chunk_size)
    b: tuple[Tensor, ...] | None = None

    @classmethod
    def from_view(cls, view: Mapping[str, Tensor], task: int | None = None) -> "LstmHypernetParams":
        """
        Collects the generator tensors.

        Without `task` every tensor is read under "lstm.". With `task` (GROW) the
        input weights, biases and output projection come from "grow.{task}." and
        only u_* (plus a shared W_out, if stored) come from "lstm.".
        """
        own = LSTM_PREFIX if task is None else f"grow.{int(task)}."
        w = tuple(as_tensor(view[own + k]) for k in INPUT_KEYS)
        u = tuple(as_tensor(view[LSTM_PREFIX + k]) for k in RECURRENT_KEYS)
        out_key = own + "W_out"
        if task is not None and LSTM_PREFIX + "W_out" in view:
            out_key = LSTM_PREFIX + "W_out"
        b = None
        if own + BIAS_KEYS[0] in view:
            b = tuple(as_tensor(view[own + k]) for k in BIAS_KEYS)
        return cls(w, u, as_tensor(view[out_key]), b)

    @property
    def hidden_size(self) -> int:
        return self.u[0].shape[0]

    @property
    def input_dim(self) -> int:
        return self.w[0].shape[1]

    @property
    def chunk_size(self) -> int:
        return self.W_out.shape[1]

    def stacked(self) -> tuple[Tensor, Tensor, Tensor | None]:
        """Gate weights stacked gate-major: W^T (d_in, 4 d_h), U^T (d_h, 4 d_h), bias (4 d_h,)."""
        W = transpose(concat(self.w, axis=0))
        U = transpose(concat(self.u, axis=0))
        b = concat(self.b) if self.b is not None else None
        return W, U, b


def _cell(z: Tensor, s_prev: Tensor | None, d_h: int) -> tuple[Tensor, Tensor]:
    """z: (rows, 4 d_h) gate pre-activations; a missing s_prev is the zero state."""
    rows = z.shape[0]

    def gate(k):
        return take(z, (slice(0, rows), slice(k * d_h, (k + 1) * d_h)))

    i, f, o = sigmoid(gate(0)), sigmoid(gate(1)), sigmoid(gate(2))
    g = tanh(gate(3))
    s = hadamard(i, g)
    if s_prev is not None:
        s = add(hadamard(f, s_prev), s)
    h = hadamard(o, tanh(s))
    return h, s


def lstm_generate_chunk(e, c_j, h_prev, s_prev, P: LstmHypernetParams) -> tuple[Tensor, Tensor, Tensor]:
    """
    One LSTM step.

    Args:
        e (Tensor): Task embedding (d_e,).
        c_j (Tensor): Chunk embedding (d_c,).
        h_prev (Tensor): Previous hidden state (d_h,).
        s_prev (Tensor): Previous cell state (d_h,).
        P (LstmHypernetParams): Generator weights.

    Returns:
        tuple: (chunk (chunk_size,), h_j (d_h,), s_j (d_h,))
    """
    e, c_j, h_prev, s_prev = (as_tensor(v) for v in (e, c_j, h_prev, s_prev))
    d_h = P.hidden_size
    if e.data.ndim != 1 or c_j.data.ndim != 1 or e.size + c_j.size != P.input_dim:
        raise DimensionError(f"lstm input {e.shape} + {c_j.shape} does not match w_i {P.w[0].shape}")
    if h_prev.shape != (d_h,) or s_prev.shape != (d_h,):
        raise DimensionError(f"lstm states {h_prev.shape}, {s_prev.shape} must both be ({d_h},)")
    W, U, b = P.stacked()
    x = reshape(concat([e, c_j]), (1, P.input_dim))
    z = add(matmul(x, W), matmul(reshape(h_prev, (1, d_h)), U))
    if b is not None:
        z = add(z, b)
    h, s = _cell(z, reshape(s_prev, (1, d_h)), d_h)
    chunk = reshape(matmul(h, P.W_out), (P.chunk_size,))
    return chunk, reshape(h, (d_h,)), reshape(s, (d_h,))


def lstm_hidden_sequence(e, chunk_embeddings, P: LstmHypernetParams) -> Tensor:
    """
    Runs the recurrence over every chunk embedding.

    The input projection for all chunks is one matmul; only the recurrent term is
    evaluated step by step.

    Returns:
        Tensor: Hidden states stacked row-wise, (n_c, d_h).
    """
    e, C = as_tensor(e), as_tensor(chunk_embeddings)
    if e.data.ndim != 1 or C.data.ndim != 2 or e.size + C.shape[1] != P.input_dim:
        raise DimensionError(f"lstm input {e.shape} + {C.shape} does not match w_i {P.w[0].shape}")
    n_c, d_h = C.shape[0], P.hidden_size
    W, U, b = P.stacked()
    Z = matmul(concat([tile_rows(e, n_c), C], axis=1), W)
    if b is not None:
        Z = add(Z, b)
    h = s = None
    hidden = []
    for j in range(n_c):
        z = take(Z, (slice(j, j + 1), slice(None)))
        if h is not None:
            z = add(z, matmul(h, U))
        h, s = _cell(z, s, d_h)
        hidden.append(h)
    return concat(hidden, axis=0)


def lstm_generate_all(e, chunk_embeddings, P: LstmHypernetParams) -> Tensor:
    """Chunk matrix (n_c, chunk_size); row j is the j-th chunk."""
    return matmul(lstm_hidden_sequence(e, chunk_embeddings, P), P.W_out)


def lstm_param_count(d_in: int, d_h: int, chunk_size: int, gate_bias: bool = False) -> int:
    return 4 * d_h * d_in + 4 * d_h * d_h + d_h * chunk_size + (4 * d_h if gate_bias else 0)


def _uniform(rng: np.random.Generator, shape: tuple, fan_in: int) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


def init_input_weights(rng: np.random.Generator, d_in: int, d_h: int, chunk_size: int,
                       gate_bias: bool = False, with_output: bool = True) -> dict[str, np.ndarray]:
    """w_* (and W_out, biases) keyed by short name."""
    out = {k: _uniform(rng, (d_h, d_in), d_in) for k in INPUT_KEYS}
    if with_output:
        out["W_out"] = _uniform(rng, (d_h, chunk_size), d_h)
    if gate_bias:
        for k in BIAS_KEYS:
            out[k] = np.full(d_h, FORGET_BIAS) if k == "b_f" else np.zeros(d_h)
    return out


def init_recurrent_weights(rng: np.random.Generator, d_h: int) -> dict[str, np.ndarray]:
    return {k: _uniform(rng, (d_h, d_h), d_h) for k in RECURRENT_KEYS}
