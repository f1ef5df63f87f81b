from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from core.errors import RegistryError

TASK_PREFIX = "emb.task."
CHUNK_KEY = "emb.chunk"


def task_key(task: int) -> str:
    return f"{TASK_PREFIX}{int(task)}"


@dataclass
class EmbeddingBank:
    """
    Learned inputs of the hypernetwork.

    `chunk` holds one row per chunk (n_c, d_c); `task` maps task id -> e^t (d_e,).
    """

    chunk: np.ndarray
    task: dict[int, np.ndarray] = field(default_factory=dict)

    @property
    def n_chunks(self) -> int:
        return int(self.chunk.shape[0])

    def task_ids(self) -> list[int]:
        return sorted(self.task)

    def add_task(self, task: int, rng: np.random.Generator, dim: int, std: float) -> np.ndarray:
        if task in self.task:
            raise RegistryError(f"Task embedding {task} already exists")
        self.task[task] = rng.standard_normal(dim) * std
        return self.task[task]

    def get_task(self, task: int) -> np.ndarray:
        if task not in self.task:
            raise RegistryError(f"No task embedding for task {task}; known {self.task_ids()}")
        return self.task[task]

    def arrays(self) -> dict[str, np.ndarray]:
        out = {CHUNK_KEY: self.chunk}
        out.update({task_key(t): e for t, e in sorted(self.task.items())})
        return out
