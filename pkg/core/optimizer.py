"""
Adam over named numpy arrays, with a side-effect-free preview of the next step.

The preview computes the update a step would apply on a clone of the moments,
which is how the regularizer's lookahead ΔΘ_h is formed.
"""

from __future__ import annotations

import copy
from typing import Iterable, Mapping

import numpy as np

from config.settings import ADAM_BETA1, ADAM_BETA2, ADAM_EPS, DEFAULT_LR
from core.errors import FrozenParameterError, NonFiniteError


class Adam:
    def __init__(self, lr: float = DEFAULT_LR, beta1: float = ADAM_BETA1, beta2: float = ADAM_BETA2,
                 eps: float = ADAM_EPS, frozen: Iterable[str] = ()):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.frozen = set(frozen)
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}
        self.t = 0

    def _advance(self, grads: Mapping[str, np.ndarray]) -> dict[str, np.ndarray]:
        """Moves the moments one step and returns the per-name update (to be added)."""
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        step_size = self.lr / bc1

        deltas = {}
        for k, g in grads.items():
            if k not in self.m:
                self.m[k] = np.zeros_like(g)
                self.v[k] = np.zeros_like(g)
            self.m[k] *= self.beta1
            self.m[k] += (1.0 - self.beta1) * g
            self.v[k] *= self.beta2
            self.v[k] += (1.0 - self.beta2) * (g * g)
            denom = np.sqrt(self.v[k] * (1.0 / bc2)) + self.eps
            deltas[k] = -(step_size * self.m[k] / denom)
        return deltas

    def preview(self, grads: Mapping[str, np.ndarray]) -> dict[str, np.ndarray]:
        """Update `step` would apply for `grads`; the optimizer itself is left untouched."""
        return copy.deepcopy(self)._advance(grads)

    def step(self, params: dict[str, np.ndarray], grads: Mapping[str, np.ndarray], step_index: int | None = None):
        """
        Applies one Adam update in place.

        Args:
            params (dict[str, np.ndarray]): Live arrays, updated in place.
            grads (Mapping[str, np.ndarray]): Gradient per name; only these names move.
            step_index (int): Reported in the error when a value goes non-finite.
        """
        blocked = sorted(set(grads) & self.frozen)
        if blocked:
            raise FrozenParameterError(f"Refusing to update frozen tensors {blocked}")
        for k, g in grads.items():
            if not np.all(np.isfinite(g)):
                raise NonFiniteError(f"Non-finite gradient for '{k}' at step {step_index}")
        for k, delta in self._advance(grads).items():
            params[k] += delta
            if not np.all(np.isfinite(params[k])):
                raise NonFiniteError(f"'{k}' became non-finite at step {step_index}")


def sgd_preview(grads: Mapping[str, np.ndarray], lr: float) -> dict[str, np.ndarray]:
    """One plain SGD step: -lr * g."""
    return {k: -lr * g for k, g in grads.items()}
