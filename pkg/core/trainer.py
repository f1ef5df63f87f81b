"""
Trainer - sequential-task optimisation of the hypernetwork

Responsibilities:
- One optimisation step: task loss, detached lookahead ΔΘ_h, β-mixed regularizer,
  group routing (shared names get ∇L_total, the task embedding gets ∇L_task only)
- train_task for the regularised generators (hnet / lstm): snapshot and Fisher after the last epoch
- train_task_grow for the GROW generator: task loss only, frozen core

Minibatches are reshuffled per (task, epoch) from the run seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from config.experiment_config import TrainConfig
from core.errors import ContractError, NonFiniteError
from core.hypernet.generate import generate_for_task
from core.hypernet.state import HypernetState, TensorView
from core.optimizer import Adam, sgd_preview
from core.regularization import (HypernetSnapshot, compute_fisher_diag, iwr_regularizer, regularizer_targets,
                                 snapshot_regularizer)
from core.scenario import Scenario
from core.target_network import SHARED_HEAD, ClassifierSpec, forward
from core.tensor import GradTape, Tensor, backward, softmax_cross_entropy
from data.task_sequences import Dataset
from utils.logger import get_logger
from utils.seeding import derive_rng

logger = get_logger(__name__)

LossFn = Callable[[Mapping[str, Tensor]], Tensor]


@dataclass(frozen=True)
class StepResult:
    l_task: float
    reg: float
    l_total: float
    n_ops: int


@dataclass(frozen=True)
class EpochStats:
    task: int
    epoch: int
    l_task: float
    reg: float
    l_total: float


@dataclass
class TaskReport:
    task: int
    epochs: list[EpochStats] = field(default_factory=list)
    n_steps: int = 0
    ops_per_step: list[int] = field(default_factory=list)


def lookahead_delta(task_grads: Mapping[str, np.ndarray], optim: Adam, mode: str = "adam") -> dict[str, np.ndarray]:
    """
    The change one optimiser step on the task loss alone would apply.

    Args:
        task_grads: ∇L_task per name.
        optim (Adam): Live optimiser; only a clone of its moments is advanced.
        mode (str): "adam", "sgd" (-lr * g) or "none" (zero).

    Returns:
        dict[str, np.ndarray]: Constant ΔΘ_h per name.
    """
    for name, g in task_grads.items():
        if not np.all(np.isfinite(g)):
            raise NonFiniteError(f"Non-finite task gradient for '{name}' in lookahead")
    if mode == "adam":
        return optim.preview(task_grads)
    if mode == "sgd":
        return sgd_preview(task_grads, optim.lr)
    if mode == "none":
        return {name: np.zeros_like(g) for name, g in task_grads.items()}
    raise ContractError(f"Unknown lookahead '{mode}'")


def _leaf_grads(grads, view: TensorView, names, params) -> dict[str, np.ndarray]:
    out = {}
    for name in names:
        leaf = view.leaves.get(name)
        out[name] = grads[leaf] if leaf is not None else np.zeros(params[name].shape)
    return out


def optimization_step(params: dict[str, np.ndarray], total_names: list[str], task_names: list[str], optim: Adam,
                      task_loss_fn: LossFn, reg_loss_fn: LossFn | None = None, beta: float = 0.0,
                      lookahead: str = "adam", step_index: int | None = None) -> StepResult:
    """
    One update of the named arrays in `params` (in place).

    With a regularizer the step is: g_task = ∇L_task(Θ); Δ = lookahead(g_task);
    g_reg = ∇R(Θ + Δ) with Δ constant; names in `total_names` move along
    g_task + β g_reg, names in `task_names` along g_task only.

    Args:
        params: Live arrays by name.
        total_names: Names updated with the total loss (generator weights, chunk embeddings).
        task_names: Names updated with the task loss only (the current task embedding).
        optim (Adam): Optimiser owning the moments.
        task_loss_fn: Maps a Tensor view of `params` to the scalar task loss.
        reg_loss_fn: Maps a candidate view (Θ + Δ) to the scalar regularizer; None skips it.
        beta (float): Regularisation constant.
        lookahead (str): "adam", "sgd" or "none".
        step_index (int): Global step, reported on failure.

    Returns:
        StepResult
    """
    trainable = list(total_names) + list(task_names)
    with GradTape() as tape:
        view = TensorView(params, trainable)
        loss = task_loss_fn(view)
        if not np.isfinite(loss.item()):
            raise NonFiniteError(f"Task loss is {loss.item()} at step {step_index}")
        grads = _leaf_grads(backward(loss, tape), view, trainable, params)
        n_ops = len(tape)

    l_task, reg = loss.item(), 0.0
    if reg_loss_fn is not None:
        delta = lookahead_delta({n: grads[n] for n in total_names}, optim, lookahead)
        with GradTape() as tape:
            candidate = TensorView(params, total_names, delta)
            penalty = reg_loss_fn(candidate)
            if not np.isfinite(penalty.item()):
                raise NonFiniteError(f"Regularizer is {penalty.item()} at step {step_index}")
            reg_grads = _leaf_grads(backward(penalty, tape), candidate, total_names, params)
            n_ops += len(tape)
        reg = penalty.item()
        if beta != 0.0:
            for name in total_names:
                grads[name] = grads[name] + beta * reg_grads[name]

    optim.step(params, grads, step_index)
    return StepResult(l_task, reg, l_task + beta * reg, n_ops)


def _batches(n: int, batch_size: int, seed: int, task: int, epoch: int):
    order = derive_rng(seed, "shuffle", task, epoch).permutation(n)
    for start in range(0, n, batch_size):
        yield order[start:start + batch_size]


def _task_loss_fn(state: HypernetState, task: int, spec: ClassifierSpec, head, x: np.ndarray,
                  y: np.ndarray) -> LossFn:
    def loss_fn(view):
        theta = generate_for_task(state, task, view).tensors
        return softmax_cross_entropy(forward(x, theta, spec, head), y)
    return loss_fn


def _head_for(task: int, scenario: Scenario):
    return task if scenario.multi_head else SHARED_HEAD


def _fit(task: int, train: Dataset, config: TrainConfig, state: HypernetState, spec: ClassifierSpec,
         scenario: Scenario, make_reg_fn: Callable[[], LossFn] | None,
         on_epoch: Callable[[EpochStats], None] | None) -> TaskReport:
    if len(train) == 0:
        raise ContractError(f"Task {task} has no training samples")
    head = _head_for(task, scenario)
    total_names, task_names = state.trainable_groups(task)
    params = state.arrays()
    optim = Adam(lr=config.lr, frozen=state.frozen)
    report = TaskReport(task)

    for epoch in range(1, config.epochs + 1):
        sums = np.zeros(3)
        n_batches = 0
        for idx in _batches(len(train), config.batch_size, config.seed, task, epoch):
            loss_fn = _task_loss_fn(state, task, spec, head, train.images[idx], train.labels[idx])
            reg_fn = make_reg_fn() if make_reg_fn is not None else None
            result = optimization_step(params, total_names, task_names, optim, loss_fn, reg_fn,
                                       beta=config.beta, lookahead=config.lookahead, step_index=report.n_steps)
            report.n_steps += 1
            report.ops_per_step.append(result.n_ops)
            sums += (result.l_task, result.reg, result.l_total)
            n_batches += 1
        l_task, reg, l_total = sums / n_batches
        stats = EpochStats(task, epoch, float(l_task), float(reg), float(l_total))
        report.epochs.append(stats)
        logger.info(f"[TRAIN] Task {task} | epoch {epoch}/{config.epochs} | L_task={l_task:.5f} "
                    f"| R={reg:.6f} | L_total={l_total:.5f}")
        if on_epoch is not None:
            on_epoch(stats)
    return report


def train_task(task: int, train: Dataset, config: TrainConfig, state: HypernetState, spec: ClassifierSpec,
               scenario: Scenario, on_epoch: Callable[[EpochStats], None] | None = None) -> TaskReport:
    """
    Trains task `task` with the snapshot or IWR regularizer (none on the first task).

    Opens the task if needed, runs `config.epochs` epochs, then freezes the task
    embedding, estimates the Fisher (IWR only) and captures the snapshot.

    Args:
        task (int): 1-based task id; tasks 1..task-1 must be finished.
        train (Dataset): Training split of the task.
        config (TrainConfig): Optimisation settings.
        state (HypernetState): hnet or lstm generator state, updated in place.
        spec (ClassifierSpec): Main-network architecture.
        scenario (Scenario): Picks the head (task head or shared).
        on_epoch: Called with each epoch's averaged losses.

    Returns:
        TaskReport
    """
    if state.generator == "grow":
        raise ContractError("GROW states are trained with train_task_grow")
    if task not in state.embeddings.task:
        state.begin_task(task)
    regularizer = config.regularizer

    make_reg_fn = None
    if task > 1 and regularizer != "none":
        snapshot = state.snapshot
        if snapshot is None or snapshot.task != task - 1:
            raise ContractError(f"Task {task} needs the snapshot taken after task {task - 1}")
        cached = None
        if config.target_chunks == "snapshot":
            cached = regularizer_targets(snapshot, state.layout, state.generator)

        def make_reg_fn():
            targets = cached
            if targets is None:
                targets = regularizer_targets(snapshot, state.layout, state.generator,
                                              chunk_embeddings=state.embeddings.chunk)

            def reg_fn(candidate):
                if regularizer == "iwr":
                    return iwr_regularizer(candidate, snapshot, state.layout, state.generator, state.fishers,
                                           targets=targets)
                return snapshot_regularizer(candidate, snapshot, state.layout, state.generator, targets=targets)
            return reg_fn

    report = _fit(task, train, config, state, spec, scenario, make_reg_fn, on_epoch)

    state.finish_task(task)
    if regularizer == "iwr":
        theta = generate_for_task(state, task).flat.data
        state.fishers[task] = compute_fisher_diag(task, train.images, train.labels, theta, state.layout, spec,
                                                  _head_for(task, scenario), config.fisher_samples)
    state.snapshot = HypernetSnapshot.capture(state, task)
    logger.info(f"[TRAIN] Task {task} finished | steps={report.n_steps} | snapshot captured")
    return report


def train_task_grow(task: int, train: Dataset, config: TrainConfig, state: HypernetState, spec: ClassifierSpec,
                    scenario: Scenario, on_epoch: Callable[[EpochStats], None] | None = None) -> TaskReport:
    """
    Trains the GROW weights of `task` on the task loss alone.

    grow_begin_task(state, task) must have been called. Only the task's own
    gate weights, output projection and embedding move (plus the recurrent core
    and chunk embeddings on task 1); no regularizer and no snapshot.
    """
    if state.generator != "grow":
        raise ContractError(f"train_task_grow needs a grow state, got '{state.generator}'")
    if task not in state.grow:
        raise ContractError(f"grow_begin_task must be called before training GROW task {task}")
    report = _fit(task, train, config, state, spec, scenario, None, on_epoch)
    state.finish_task(task)
    logger.info(f"[GROW] Task {task} finished | steps={report.n_steps} | ops/step={report.ops_per_step[-1]}")
    return report
