"""Adam optimizer over a ParameterSet."""

from __future__ import annotations

import numpy as np

from .autodiff import ParameterSet


class Adam:
    """Adam with bias-corrected first/second moments.

    Defaults are the standard training constants: lr 1e-4, beta1 0.9,
    beta2 0.999, eps 1e-8.  Moments live per parameter and update in the
    set's deterministic iteration order.
    """

    def __init__(self, params: ParameterSet, lr: float = 1e-4,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        if not 0.0 <= beta1 < 1.0 or not 0.0 <= beta2 < 1.0:
            raise ValueError("beta1/beta2 must lie in [0, 1)")
        self.params = params
        self.lr = float(lr)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.eps = float(eps)
        self.step_count = 0
        self._m = {name: np.zeros_like(t.data) for name, t in params.items()}
        self._v = {name: np.zeros_like(t.data) for name, t in params.items()}

    def step(self, grads: dict) -> None:
        """Apply one update from a name -> gradient array map."""
        self.step_count += 1
        t = self.step_count
        bc1 = 1.0 - self.beta1**t
        bc2 = 1.0 - self.beta2**t
        for name, param in self.params.items():
            g = grads[name]
            m = self._m[name]
            v = self._v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            param.data -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)
