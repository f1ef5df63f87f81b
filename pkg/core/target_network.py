"""
Target Network - the MLP classifier whose weights come from the hypernetwork

Responsibilities:
- Describe the classifier (input width, hidden widths, heads per scenario)
- Forward pass with externally supplied parameters (ReLU hidden layers)
- Predictive entropy used for task inference

Parameter naming (shared with the hypernetwork layout):
    layer{k}.weight (in, out), layer{k}.bias (out,)   k = 1..len(hidden)
    head{t}.weight, head{t}.bias                      per-task heads (CL1, CL3)
    head_shared.weight, head_shared.bias              single head (CL2)
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from core.errors import ContractError, RegistryError
from core.scenario import Scenario
from core.tensor import Tensor, add, as_tensor, log_softmax_rows, matmul, relu

SHARED_HEAD = "shared"


def head_prefix(head) -> str:
    return "head_shared" if head == SHARED_HEAD else f"head{int(head)}"


@dataclass(frozen=True)
class ClassifierSpec:
    input_dim: int
    hidden: tuple[int, ...]
    heads: tuple[tuple[object, int], ...]  # (task id or "shared", n_classes)

    def __post_init__(self):
        widths = (self.input_dim, *self.hidden, *(k for _, k in self.heads))
        if any(int(w) <= 0 for w in widths):
            raise ContractError(f"Classifier widths must be positive, got {widths}")
        if not self.heads:
            raise ContractError("Classifier needs at least one head")

    @classmethod
    def for_scenario(cls, input_dim: int, hidden, n_classes: int, scenario: Scenario,
                     n_tasks: int) -> "ClassifierSpec":
        scenario = Scenario.parse(scenario)
        if scenario.multi_head:
            heads = tuple((t, n_classes) for t in range(1, n_tasks + 1))
        else:
            heads = ((SHARED_HEAD, n_classes),)
        return cls(int(input_dim), tuple(int(h) for h in hidden), heads)

    def head_ids(self) -> list:
        return [h for h, _ in self.heads]

    def n_classes(self, head) -> int:
        for h, k in self.heads:
            if h == head:
                return k
        raise RegistryError(f"Unknown head {head!r}; known heads {self.head_ids()}")

    def parameter_shapes(self) -> list[tuple[str, tuple[int, ...]]]:
        """Flattening order: per layer weight then bias, first to last, heads in task order."""
        shapes = []
        fan_in = self.input_dim
        for k, width in enumerate(self.hidden, start=1):
            shapes.append((f"layer{k}.weight", (fan_in, width)))
            shapes.append((f"layer{k}.bias", (width,)))
            fan_in = width
        for head, n_classes in self.heads:
            prefix = head_prefix(head)
            shapes.append((f"{prefix}.weight", (fan_in, n_classes)))
            shapes.append((f"{prefix}.bias", (n_classes,)))
        return shapes


def forward(x, theta: Mapping[str, Tensor], spec: ClassifierSpec, head) -> Tensor:
    """
    Runs the classifier with generated parameters.

    Args:
        x (Tensor | np.ndarray): Inputs, shape (B, input_dim).
        theta (Mapping[str, Tensor]): Structured main-network parameters.
        spec (ClassifierSpec): Architecture the parameters follow.
        head: Task id (multi-head) or "shared".

    Returns:
        Tensor: Logits, shape (B, n_classes of the head).
    """
    if head not in spec.head_ids():
        raise RegistryError(f"Unknown head {head!r}; known heads {spec.head_ids()}")
    out = as_tensor(x)
    for k in range(1, len(spec.hidden) + 1):
        out = relu(add(matmul(out, theta[f"layer{k}.weight"]), theta[f"layer{k}.bias"]))
    prefix = head_prefix(head)
    return add(matmul(out, theta[f"{prefix}.weight"]), theta[f"{prefix}.bias"])


def predictive_entropy(logits) -> float | np.ndarray:
    """
    Entropy of softmax(logits) in nats.

    A 1-D input gives one float; a (B, K) input gives one entropy per row.
    """
    values = logits.data if isinstance(logits, Tensor) else np.asarray(logits, dtype=np.float64)
    logp = log_softmax_rows(values)
    entropy = -(np.exp(logp) * logp).sum(axis=-1)
    entropy = np.maximum(entropy, 0.0)
    return float(entropy) if entropy.ndim == 0 else entropy
