"""
Evaluation - scenario protocols and continual-learning metrics

Responsibilities:
- Entropy-based task inference (lowest predictive entropy wins, ties to the lowest id)
- CL1 / CL2 / CL3 accuracy of every seen task after a training stage
- Accuracy matrix A[stage][task]: final, during, forgetting
- Compression ratio of the hypernetwork

CL1 uses the known task head. CL2 keeps one shared head but still needs an
embedding per sample, chosen by entropy. CL3 picks the head by entropy and a
sample only counts when both the task and the class are right.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from core.errors import ContractError, RegistryError
from core.hypernet.generate import generate_for_task
from core.hypernet.state import HypernetState, count_hypernet_params
from core.scenario import Scenario
from core.target_network import SHARED_HEAD, ClassifierSpec, forward, predictive_entropy
from data.task_sequences import Dataset
from utils.logger import get_logger

logger = get_logger(__name__)

EVAL_BATCH = 2000


@dataclass(frozen=True)
class AccuracyRow:
    stage: int
    eval_task: int
    accuracy: float


def _spec(state: HypernetState) -> ClassifierSpec:
    if state.layout.spec is None:
        raise ContractError("state layout carries no classifier spec")
    return state.layout.spec


def _logits(x: np.ndarray, theta, spec: ClassifierSpec, head) -> np.ndarray:
    parts = [forward(x[i:i + EVAL_BATCH], theta, spec, head).data for i in range(0, len(x), EVAL_BATCH)]
    return np.concatenate(parts, axis=0)


def _candidate_logits(x: np.ndarray, state: HypernetState, candidates: Sequence[int]) -> dict[int, np.ndarray]:
    """Logits of every candidate task's generated network on its inference head."""
    spec = _spec(state)
    shared = SHARED_HEAD in spec.head_ids()
    out = {}
    for t in candidates:
        theta = generate_for_task(state, t).tensors
        out[t] = _logits(x, theta, spec, SHARED_HEAD if shared else t)
    return out


def _select(logits: Mapping[int, np.ndarray], candidates: Sequence[int]) -> np.ndarray:
    """Per-sample candidate with the lowest entropy; argmin keeps the first (lowest id) on ties."""
    entropies = np.stack([np.atleast_1d(predictive_entropy(logits[t])) for t in candidates])
    return np.asarray(candidates)[np.argmin(entropies, axis=0)]


def infer_tasks(x: np.ndarray, state: HypernetState, candidates: Sequence[int]) -> np.ndarray:
    """Inferred task id per row of `x`."""
    candidates = sorted(int(t) for t in candidates)
    if not candidates:
        raise ContractError("task inference needs at least one candidate")
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    return _select(_candidate_logits(x, state, candidates), candidates)


def infer_task(x, state: HypernetState, candidates: Sequence[int]) -> int:
    """
    Task whose generated network is most confident on one sample.

    Args:
        x: One input (input_dim,) or (1, input_dim).
        state (HypernetState): Trained generator; its layout carries the heads.
        candidates: Task ids to consider.

    Returns:
        int: Lowest-entropy candidate, lowest id on exact ties.
    """
    candidates = list(candidates)
    if len(candidates) == 1:
        return int(candidates[0])
    return int(infer_tasks(np.reshape(x, (1, -1)), state, candidates)[0])


def evaluate(scenario: Scenario, state: HypernetState, test_sets: Mapping[int, Dataset], stage: int) -> list[AccuracyRow]:
    """
    Accuracy of every task 1..stage on its test split.

    Args:
        scenario (Scenario): Inference protocol.
        state (HypernetState): Exactly tasks 1..stage must be trained.
        test_sets: Test split per task id.
        stage (int): Number of trained tasks.

    Returns:
        list[AccuracyRow]: One row per evaluated task, in task order.
    """
    scenario = Scenario.parse(scenario)
    if state.finished != list(range(1, stage + 1)):
        raise ContractError(f"stage {stage} evaluated with finished tasks {state.finished}")
    spec = _spec(state)
    seen = list(range(1, stage + 1))
    thetas = {t: generate_for_task(state, t).tensors for t in seen}

    rows = []
    for t in seen:
        if t not in test_sets:
            raise RegistryError(f"No test split for task {t}")
        data = test_sets[t]
        if len(data) == 0:
            raise ContractError(f"Test split of task {t} is empty")
        x, y = data.images, data.labels

        if scenario is Scenario.CL1:
            correct = _logits(x, thetas[t], spec, t).argmax(axis=1) == y
        else:
            head_of = (lambda c: SHARED_HEAD) if scenario is Scenario.CL2 else (lambda c: c)
            logits = {c: _logits(x, thetas[c], spec, head_of(c)) for c in seen}
            chosen = _select(logits, seen)
            stacked = np.stack([logits[c] for c in seen])
            picked = stacked[np.searchsorted(seen, chosen), np.arange(len(y))]
            correct = picked.argmax(axis=1) == y
            if scenario is Scenario.CL3:
                correct &= chosen == t
        acc = float(correct.mean())
        rows.append(AccuracyRow(stage, t, acc))
        logger.info(f"[EVAL] {scenario.name} stage {stage} | task {t} | acc={acc:.4f} | n={len(y)}")
    return rows


def compression_ratio(state: HypernetState, layout=None) -> float:
    """Trainable hypernetwork scalars over the scalars of one main network."""
    layout = layout or state.layout
    return count_hypernet_params(state) / layout.total_params


@dataclass
class MetricsRecord:
    """Accuracy matrix of one run; stages must be recorded 1, 2, ... in order."""

    model: str
    scenario: str
    matrix: dict[int, dict[int, float]] = field(default_factory=dict)
    compression_ratio: float = float("nan")

    def record(self, rows: Sequence[AccuracyRow]):
        if not rows:
            raise ContractError("no accuracy rows to record")
        stage = rows[0].stage
        if stage != len(self.matrix) + 1:
            raise ContractError(f"stage {stage} recorded after {len(self.matrix)} stages")
        if sorted(r.eval_task for r in rows) != list(range(1, stage + 1)):
            raise ContractError(f"stage {stage} must evaluate tasks 1..{stage}")
        for r in rows:
            if not 0.0 <= r.accuracy <= 1.0:
                raise ContractError(f"accuracy {r.accuracy} of task {r.eval_task} outside [0, 1]")
        self.matrix[stage] = {r.eval_task: r.accuracy for r in rows}

    @property
    def n_stages(self) -> int:
        return len(self.matrix)

    def final(self) -> dict[int, float]:
        return dict(self.matrix[self.n_stages]) if self.matrix else {}

    def during(self) -> dict[int, float]:
        return {t: self.matrix[t][t] for t in self.matrix}

    def forgetting(self) -> dict[int, float]:
        final = self.final()
        return {t: self.matrix[t][t] - final[t] for t in self.matrix}

    def avg_final(self) -> float:
        return float(np.mean(list(self.final().values())))

    def avg_during(self) -> float:
        return float(np.mean(list(self.during().values())))

    def avg_forgetting(self) -> float:
        """Mean forgetting over tasks 1..T-1 (0.0 with a single task)."""
        values = [v for t, v in self.forgetting().items() if t < self.n_stages]
        return float(np.mean(values)) if values else 0.0

    def rows(self) -> list[dict]:
        return [
            {"model": self.model, "scenario": self.scenario, "stage": stage, "eval_task": task, "accuracy": acc}
            for stage in sorted(self.matrix) for task, acc in sorted(self.matrix[stage].items())
        ]
