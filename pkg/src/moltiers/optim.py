"""Gradient-descent optimizers over lists of parameter tensors.

Both optimizers validate that every parameter carries a gradient before
touching any of them, apply the update in place, and clear the gradients,
so a forgotten ``backward`` fails loudly instead of silently reusing stale
gradients.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .autodiff import GradientError, Tensor


class SGD:
    """Plain stochastic gradient descent: w <- w - lr * grad."""

    def __init__(self, params: Sequence[Tensor], learning_rate: float):
        if learning_rate <= 0.0:
            raise ValueError(f"learning rate must be positive, got {learning_rate}")
        self.params = list(params)
        self.learning_rate = float(learning_rate)
        self.step_count = 0

    def step(self) -> None:
        for i, p in enumerate(self.params):
            if p.grad is None:
                raise GradientError(f"sgd step: parameter {i} has no gradient")
        for p in self.params:
            p.values -= self.learning_rate * p.grad
            p.grad = None
        self.step_count += 1


class Adam:
    """Adam with bias correction (Kingma & Ba defaults)."""

    def __init__(
        self,
        params: Sequence[Tensor],
        learning_rate: float,
        beta1: float = 0.9,
        beta2: float = 0.999,
        epsilon: float = 1e-8,
    ):
        if learning_rate <= 0.0:
            raise ValueError(f"learning rate must be positive, got {learning_rate}")
        self.params = list(params)
        self.learning_rate = float(learning_rate)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.epsilon = float(epsilon)
        self.step_count = 0
        # First and second moment buffers, shaped exactly like the parameters.
        self._m = [np.zeros_like(p.values) for p in self.params]
        self._v = [np.zeros_like(p.values) for p in self.params]

    def step(self) -> None:
        for i, p in enumerate(self.params):
            if p.grad is None:
                raise GradientError(f"adam step: parameter {i} has no gradient")
        self.step_count += 1
        t = self.step_count
        for i, p in enumerate(self.params):
            g = p.grad
            self._m[i] = self.beta1 * self._m[i] + (1.0 - self.beta1) * g
            self._v[i] = self.beta2 * self._v[i] + (1.0 - self.beta2) * g * g
            m_hat = self._m[i] / (1.0 - self.beta1 ** t)
            v_hat = self._v[i] / (1.0 - self.beta2 ** t)
            p.values -= self.learning_rate * m_hat / (np.sqrt(v_hat) + self.epsilon)
            p.grad = None
