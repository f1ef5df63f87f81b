"""
Main-network layout: names, shapes, flattening order and chunking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from core.errors import ContractError, LayoutError
from core.scenario import Scenario
from core.target_network import SHARED_HEAD, ClassifierSpec
from core.tensor import Tensor, reshape, take


@dataclass(frozen=True)
class MainNetLayout:
    entries: tuple[tuple[str, tuple[int, ...]], ...]
    chunk_size: int
    spec: ClassifierSpec | None = None
    offsets: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.chunk_size < 1:
            raise ContractError(f"chunk_size must be >= 1, got {self.chunk_size}")
        offsets, start = {}, 0
        for name, shape in self.entries:
            size = int(np.prod(shape, dtype=np.int64))
            offsets[name] = (start, start + size, tuple(shape))
            start += size
        object.__setattr__(self, "offsets", offsets)

    @property
    def total_params(self) -> int:
        if not self.entries:
            return 0
        return self.offsets[self.entries[-1][0]][1]

    @property
    def n_chunks(self) -> int:
        return math.ceil(self.total_params / self.chunk_size)

    @property
    def names(self) -> list[str]:
        return [name for name, _ in self.entries]

    def span(self, name: str) -> tuple[int, int]:
        if name not in self.offsets:
            raise LayoutError(f"'{name}' is not part of the layout")
        start, stop, _ = self.offsets[name]
        return start, stop

    def flatten(self, arrays: Mapping[str, np.ndarray]) -> np.ndarray:
        parts = []
        for name, shape in self.entries:
            arr = np.asarray(arrays[name], dtype=np.float64)
            if arr.shape != tuple(shape):
                raise LayoutError(f"'{name}' has shape {arr.shape}, layout expects {tuple(shape)}")
            parts.append(arr.reshape(-1))
        return np.concatenate(parts) if parts else np.zeros(0)

    def unflatten(self, flat: np.ndarray) -> dict[str, np.ndarray]:
        flat = np.asarray(flat, dtype=np.float64)
        self._check_length(flat.shape)
        return {name: flat[start:stop].reshape(shape) for name, (start, stop, shape) in self.offsets.items()}

    def unflatten_tensor(self, flat: Tensor) -> dict[str, Tensor]:
        self._check_length(flat.shape)
        return {name: reshape(take(flat, slice(start, stop)), shape)
                for name, (start, stop, shape) in self.offsets.items()}

    def _check_length(self, shape):
        if len(shape) != 1 or shape[0] != self.total_params:
            raise LayoutError(f"flat vector of shape {shape} does not match total_params={self.total_params}")

    def to_dict(self) -> dict:
        spec = None
        if self.spec is not None:
            spec = {
                "input_dim": self.spec.input_dim,
                "hidden": list(self.spec.hidden),
                "heads": [[h, k] for h, k in self.spec.heads],
            }
        return {
            "entries": [[name, list(shape)] for name, shape in self.entries],
            "chunk_size": self.chunk_size,
            "spec": spec,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "MainNetLayout":
        spec = payload.get("spec")
        if spec is not None:
            heads = tuple((h if h == SHARED_HEAD else int(h), int(k)) for h, k in spec["heads"])
            spec = ClassifierSpec(int(spec["input_dim"]), tuple(spec["hidden"]), heads)
        entries = tuple((name, tuple(int(s) for s in shape)) for name, shape in payload["entries"])
        return cls(entries, int(payload["chunk_size"]), spec)


def build_layout(arch: ClassifierSpec, scenario: Scenario, n_tasks: int, chunk_size: int) -> MainNetLayout:
    """
    Lays out the classifier's tensors for chunked generation.

    Args:
        arch (ClassifierSpec): Target classifier.
        scenario (Scenario): Governs the head count (CL2 -> one shared head).
        n_tasks (int): Number of tasks in the sequence.
        chunk_size (int): Outputs per hypernetwork invocation.

    Returns:
        MainNetLayout: Deterministic flattening order and chunk arithmetic.
    """
    scenario = Scenario.parse(scenario)
    if chunk_size < 1:
        raise ContractError(f"chunk_size must be >= 1, got {chunk_size}")
    heads = arch.head_ids()
    if scenario.multi_head and heads != list(range(1, n_tasks + 1)):
        raise ContractError(f"{scenario.name} needs one head per task 1..{n_tasks}, got {heads}")
    if not scenario.multi_head and heads != [SHARED_HEAD]:
        raise ContractError(f"{scenario.name} needs exactly one shared head, got {heads}")
    return MainNetLayout(tuple(arch.parameter_shapes()), int(chunk_size), arch)
