"""
Task Sequences - datasets and the continual-learning benchmarks built from them

Responsibilities:
- Dataset / Task / TaskSequence containers
- Split benchmark: disjoint class pairs relabelled to {0, 1}
- Permuted benchmark: one fixed pixel permutation per task (task 1 unpermuted)
- Synthetic Gaussian blobs for fast runs without downloads

Every construction is deterministic given (source data, seed).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterator, Sequence

import numpy as np
from sklearn.model_selection import train_test_split

from config.settings import (SPLIT_MNIST_PAIRING, SYNTH_CLASSES, SYNTH_DIM, SYNTH_SAMPLES_PER_CLASS,
                             SYNTH_SEPARATION, SYNTH_TASKS, SYNTH_TEST_FRACTION)
from core.errors import ContractError, RegistryError
from utils.logger import get_logger
from utils.seeding import derive_rng

logger = get_logger(__name__)


@dataclass(frozen=True)
class Dataset:
    images: np.ndarray  # (N, D) float64 in [0, 1] for MNIST
    labels: np.ndarray  # (N,) int64
    split: str = "train"

    def __post_init__(self):
        if len(self.images) != len(self.labels):
            raise ContractError(f"{len(self.images)} images but {len(self.labels)} labels")

    def __len__(self) -> int:
        return int(self.labels.shape[0])

    @property
    def input_dim(self) -> int:
        return int(self.images.shape[1])

    def subset(self, index) -> "Dataset":
        return Dataset(self.images[index], self.labels[index], self.split)

    def head(self, n: int) -> "Dataset":
        """First n samples (everything when n <= 0)."""
        return self if n <= 0 or n >= len(self) else self.subset(slice(0, n))


@dataclass(frozen=True)
class Task:
    task_id: int
    train: Dataset
    test: Dataset
    n_classes: int
    class_map: dict[int, int] = field(default_factory=dict)  # source label -> task label
    permutation: np.ndarray | None = None


@dataclass(frozen=True)
class TaskSequence:
    name: str
    tasks: tuple[Task, ...]

    def __len__(self) -> int:
        return len(self.tasks)

    def __iter__(self) -> Iterator[Task]:
        return iter(self.tasks)

    def task(self, task_id: int) -> Task:
        if not 1 <= task_id <= len(self.tasks):
            raise RegistryError(f"No task {task_id} in '{self.name}' (1..{len(self.tasks)})")
        return self.tasks[task_id - 1]

    @property
    def input_dim(self) -> int:
        return self.tasks[0].train.input_dim

    @property
    def n_classes(self) -> int:
        return max(t.n_classes for t in self.tasks)

    def capped(self, max_train: int = 0, max_test: int = 0) -> "TaskSequence":
        """Keeps the first max_train / max_test samples of every task (0 keeps all)."""
        if max_train <= 0 and max_test <= 0:
            return self
        tasks = tuple(replace(t, train=t.train.head(max_train), test=t.test.head(max_test)) for t in self.tasks)
        return TaskSequence(self.name, tasks)


def _filter_pair(data: Dataset, pair: Sequence[int]) -> tuple[Dataset, dict[int, int]]:
    class_map = {int(c): i for i, c in enumerate(pair)}
    for c in class_map:
        if not np.any(data.labels == c):
            raise ContractError(f"class {c} absent from the {data.split} split")
    mask = np.isin(data.labels, list(class_map))
    labels = np.array([class_map[int(c)] for c in data.labels[mask]], dtype=np.int64)
    return Dataset(data.images[mask], labels, data.split), class_map


def split_tasks(train: Dataset, test: Dataset, pairing: Sequence[Sequence[int]] = SPLIT_MNIST_PAIRING,
                seed: int = 0) -> TaskSequence:
    """
    One binary task per class pair.

    Each task keeps the samples of its two classes in source order, relabels
    them to {0, 1} in pair order, then shuffles the training split with the
    task's seed.

    Args:
        train (Dataset): Source training split.
        test (Dataset): Source test split.
        pairing: Disjoint class pairs, default (0,1),(2,3),(4,5),(6,7),(8,9).
        seed (int): Master seed.

    Returns:
        TaskSequence
    """
    seen: set[int] = set()
    for pair in pairing:
        overlap = seen & set(pair)
        if overlap or len(set(pair)) != len(pair):
            raise ContractError(f"pairing must use disjoint classes, {sorted(overlap or pair)} repeats")
        seen |= set(pair)

    tasks = []
    for task_id, pair in enumerate(pairing, start=1):
        task_train, class_map = _filter_pair(train, pair)
        task_test, _ = _filter_pair(test, pair)
        order = derive_rng(seed, "split-shuffle", task_id).permutation(len(task_train))
        tasks.append(Task(task_id, task_train.subset(order), task_test, len(pair), class_map))
        logger.debug(f"[DATA] split task {task_id} classes={tuple(pair)} train={len(task_train)} test={len(task_test)}")
    return TaskSequence("split_mnist", tuple(tasks))


def permute_tasks(train: Dataset, test: Dataset, n_tasks: int, seed: int = 0) -> TaskSequence:
    """Task 1 is the source data; task t >= 2 applies one seeded pixel permutation to both splits."""
    if n_tasks < 1:
        raise ContractError(f"n_tasks must be >= 1, got {n_tasks}")
    n_classes = int(max(train.labels.max(), test.labels.max())) + 1
    identity = {c: c for c in range(n_classes)}
    tasks = []
    for task_id in range(1, n_tasks + 1):
        if task_id == 1:
            perm = np.arange(train.input_dim)
        else:
            perm = derive_rng(seed, "permutation", task_id).permutation(train.input_dim)
        tasks.append(Task(
            task_id,
            Dataset(train.images[:, perm], train.labels, train.split),
            Dataset(test.images[:, perm], test.labels, test.split),
            n_classes,
            identity,
            perm,
        ))
    logger.debug(f"[DATA] permuted sequence with {n_tasks} tasks over {train.input_dim} pixels")
    return TaskSequence("permuted_mnist", tuple(tasks))


def synth_blobs(n_tasks: int = SYNTH_TASKS, n_classes: int = SYNTH_CLASSES, dim: int = SYNTH_DIM,
                separation: float = SYNTH_SEPARATION, seed: int = 0,
                samples_per_class: int = SYNTH_SAMPLES_PER_CLASS, allow_degenerate: bool = False) -> TaskSequence:
    """
    Gaussian class clusters, one independent draw per task.

    Class means lie on a sphere of radius `separation` (random directions),
    samples have unit covariance, and each task is split 80/20 stratified.
    `allow_degenerate` admits separation 0 (indistinguishable classes).
    """
    if separation < 0 or (separation == 0 and not allow_degenerate):
        raise ContractError(f"separation must be > 0, got {separation}")
    if n_tasks < 1 or n_classes < 2 or dim < 1 or samples_per_class < 2:
        raise ContractError(f"invalid synth shape: tasks={n_tasks} classes={n_classes} dim={dim} "
                            f"samples={samples_per_class}")
    tasks = []
    for task_id in range(1, n_tasks + 1):
        rng = derive_rng(seed, "synth", task_id)
        directions = rng.standard_normal((n_classes, dim))
        means = separation * directions / np.linalg.norm(directions, axis=1, keepdims=True)
        labels = np.repeat(np.arange(n_classes, dtype=np.int64), samples_per_class)
        images = means[labels] + rng.standard_normal((len(labels), dim))
        x_train, x_test, y_train, y_test = train_test_split(
            images, labels, test_size=SYNTH_TEST_FRACTION, stratify=labels,
            random_state=int(rng.integers(2**31 - 1)),
        )
        tasks.append(Task(
            task_id,
            Dataset(x_train, y_train, "train"),
            Dataset(x_test, y_test, "test"),
            n_classes,
            {c: c for c in range(n_classes)},
        ))
    logger.debug(f"[DATA] synth sequence tasks={n_tasks} classes={n_classes} dim={dim} sep={separation}")
    return TaskSequence("synth", tuple(tasks))
