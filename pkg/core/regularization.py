"""
Regularization - keeps old-task generator outputs in place

Responsibilities:
- Capture the post-task snapshot Θ_h* of every hypernetwork array
- Snapshot output regularizer: mean squared drift of old-task Θ_m
- Importance-weighted variant (IWR) with a per-parameter diagonal Fisher
- Estimate that diagonal Fisher from squared per-sample gradients w.r.t. Θ_m

The candidate generator is passed as a Mapping of Tensors (normally a TensorView
whose trainable names carry a constant lookahead delta). Old-task embeddings
and targets always come from the snapshot and never receive gradient.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from config.settings import FISHER_MAX_SAMPLES
from core.errors import ContractError, DegenerateFisherWarning, LayoutError, RegistryError
from core.hypernet.embeddings import CHUNK_KEY, task_key
from core.hypernet.generate import generate_main_params
from core.hypernet.layout import MainNetLayout
from core.hypernet.state import HypernetState, TensorView
from core.target_network import ClassifierSpec, forward
from core.tensor import GradTape, Tensor, add, backward, mul, softmax_cross_entropy, square, sub, tsum
from utils.logger import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True)
class HypernetSnapshot:
    """Frozen copy of every hypernetwork array taken right after `task` finished."""

    task: int
    arrays: dict[str, np.ndarray]

    @classmethod
    def capture(cls, state: HypernetState, task: int) -> "HypernetSnapshot":
        arrays = {}
        for name, arr in state.arrays().items():
            frozen = np.array(arr, dtype=np.float64, copy=True)
            frozen.flags.writeable = False
            arrays[name] = frozen
        return cls(task, arrays)

    def old_tasks(self) -> list[int]:
        return sorted(int(name[len("emb.task."):]) for name in self.arrays if name.startswith("emb.task."))

    def task_embedding(self, task: int) -> np.ndarray:
        key = task_key(task)
        if key not in self.arrays:
            raise RegistryError(f"Snapshot after task {self.task} has no embedding for task {task}")
        return self.arrays[key]

    def view(self) -> TensorView:
        return TensorView(self.arrays)


@dataclass(frozen=True)
class FisherDiag:
    """
    Diagonal Fisher of one task, aligned with the flat layout.

    `values` has mean 1; `scale` is the raw mean that was divided out (0.0 when
    the estimate was degenerate and replaced by ones).
    """

    task: int
    values: np.ndarray
    scale: float
    n_samples: int = 0

    def raw(self) -> np.ndarray:
        return self.values * self.scale


def regularizer_targets(snapshot: HypernetSnapshot, layout: MainNetLayout, generator: str,
                        tasks: list[int] | None = None,
                        chunk_embeddings: np.ndarray | None = None) -> dict[int, np.ndarray]:
    """
    Flat old-task outputs f_h(e^t, c, Θ_h*) as constants.

    Args:
        chunk_embeddings: Chunk embeddings to feed instead of the snapshot's own
            (the live ones when targets follow the co-trained chunk embeddings).
    """
    tasks = snapshot.old_tasks() if tasks is None else tasks
    arrays = snapshot.arrays
    if chunk_embeddings is not None:
        arrays = {**arrays, CHUNK_KEY: chunk_embeddings}
    view = TensorView(arrays)
    return {t: generate_main_params(view[task_key(t)], view, layout, generator, t).flat.data for t in tasks}


def drift_penalty(outputs: Mapping[int, Tensor], targets: Mapping[int, np.ndarray],
                  importances: Mapping[int, np.ndarray] | None = None) -> Tensor:
    """
    (1 / n_tasks) * sum_t sum_i w^t_i (target^t_i - output^t_i)^2, tasks summed in id order.

    Without `importances` every weight is 1.
    """
    if not outputs:
        raise ContractError("drift penalty needs at least one previous task")
    total = None
    for t in sorted(outputs):
        diff = square(sub(outputs[t], Tensor(targets[t])))
        if importances is not None:
            weights = np.asarray(importances[t], dtype=np.float64)
            if weights.shape != diff.shape:
                raise LayoutError(f"importance of task {t} has shape {weights.shape}, outputs {diff.shape}")
            diff = mul(diff, Tensor(weights))
        term = tsum(diff)
        total = term if total is None else add(total, term)
    return mul(total, 1.0 / len(outputs))


def _candidate_outputs(candidate: Mapping[str, Tensor], snapshot: HypernetSnapshot, layout: MainNetLayout,
                       generator: str, embeddings: Mapping[int, np.ndarray] | None) -> dict[int, Tensor]:
    tasks = snapshot.old_tasks()
    if not tasks:
        raise ContractError("regularizer needs at least one previous task; skip the term on task 1")
    outputs = {}
    for t in tasks:
        e = embeddings[t] if embeddings is not None else snapshot.task_embedding(t)
        outputs[t] = generate_main_params(Tensor(e), candidate, layout, generator, t).flat
    return outputs


def snapshot_regularizer(candidate: Mapping[str, Tensor], snapshot: HypernetSnapshot, layout: MainNetLayout,
                         generator: str, embeddings: Mapping[int, np.ndarray] | None = None,
                         targets: Mapping[int, np.ndarray] | None = None) -> Tensor:
    """
    Mean squared drift of every old task's generated Θ_m.

    Args:
        candidate (Mapping[str, Tensor]): Θ_h + ΔΘ_h (chunk embeddings included).
        snapshot (HypernetSnapshot): Θ_h* after the previous task.
        layout (MainNetLayout): Main-network layout.
        generator (str): "hnet" or "lstm".
        embeddings: Old-task embeddings by id; defaults to the snapshot's.
        targets: Precomputed regularizer_targets; computed here when absent.

    Returns:
        Tensor: Scalar penalty.
    """
    outputs = _candidate_outputs(candidate, snapshot, layout, generator, embeddings)
    if targets is None:
        targets = regularizer_targets(snapshot, layout, generator, list(outputs))
    return drift_penalty(outputs, targets)


def iwr_regularizer(candidate: Mapping[str, Tensor], snapshot: HypernetSnapshot, layout: MainNetLayout,
                    generator: str, fishers: Mapping[int, FisherDiag],
                    embeddings: Mapping[int, np.ndarray] | None = None,
                    targets: Mapping[int, np.ndarray] | None = None) -> Tensor:
    """Snapshot regularizer with every coordinate weighted by its task's Fisher diagonal."""
    outputs = _candidate_outputs(candidate, snapshot, layout, generator, embeddings)
    importances = {}
    for t in outputs:
        if t not in fishers:
            raise RegistryError(f"No Fisher diagonal for task {t}")
        values = fishers[t].values
        if values.shape != (layout.total_params,):
            raise LayoutError(f"Fisher of task {t} has length {values.shape}, layout has {layout.total_params}")
        importances[t] = values
    if targets is None:
        targets = regularizer_targets(snapshot, layout, generator, list(outputs))
    return drift_penalty(outputs, targets, importances)


def compute_fisher_diag(task: int, x: np.ndarray, y: np.ndarray, theta_flat: np.ndarray, layout: MainNetLayout,
                        spec: ClassifierSpec, head, n_samples: int = FISHER_MAX_SAMPLES) -> FisherDiag:
    """
    Empirical diagonal Fisher of the task loss w.r.t. the generated main-network parameters.

    FI_i = mean over samples of (dL/dΘ_m,i)^2 using ground-truth labels on the first
    min(n_samples, N) samples, then scaled to mean 1.

    Args:
        task (int): Task id the estimate belongs to.
        x (np.ndarray): Inputs (N, input_dim).
        y (np.ndarray): Labels (N,) in the head's label space.
        theta_flat (np.ndarray): Generated Θ_m of the task, flat.
        layout (MainNetLayout): Flattening order.
        spec (ClassifierSpec): Classifier architecture.
        head: Head to evaluate (task id or "shared").
        n_samples (int): Cap on the number of samples.

    Returns:
        FisherDiag
    """
    n = min(int(n_samples), len(x))
    if n < 1:
        raise ContractError(f"Fisher estimate for task {task} needs at least one sample")
    structured = layout.unflatten(theta_flat)
    accum = {name: np.zeros(arr.shape) for name, arr in structured.items()}

    for i in range(n):
        leaves = {name: Tensor(arr, requires_grad=True) for name, arr in structured.items()}
        with GradTape() as tape:
            loss = softmax_cross_entropy(forward(x[i:i + 1], leaves, spec, head), y[i:i + 1])
            grads = backward(loss, tape)
        for name, leaf in leaves.items():
            accum[name] += np.square(grads[leaf])

    raw = layout.flatten(accum) / n
    scale = float(raw.mean())
    if scale <= 0.0 or not np.isfinite(scale):
        warnings.warn(f"Fisher of task {task} is zero everywhere; using uniform importance",
                      DegenerateFisherWarning, stacklevel=2)
        logger.warning(f"[FISHER] Task {task} degenerate over {n} samples, falling back to ones")
        return FisherDiag(task, np.ones(layout.total_params), 0.0, n)

    logger.info(f"[FISHER] Task {task} | samples={n} | raw mean={scale:.3e} | max={raw.max() / scale:.2f}")
    return FisherDiag(task, raw / scale, scale, n)
