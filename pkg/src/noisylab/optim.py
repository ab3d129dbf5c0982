"""Adam optimizer with bias correction."""

import numpy as np

from .autodiff import NonFiniteError


class Adam:
    """Standard Adam over a list of parameter tensors.

    Holds per-parameter first and second moments and a shared step count.
    ``step()`` applies one update and zeroes the gradients afterward.
    """

    def __init__(self, params, lr=0.001, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self.first_moment = [np.zeros_like(p.values) for p in self.params]
        self.second_moment = [np.zeros_like(p.values) for p in self.params]

    def step(self):
        self.step_count += 1
        t = self.step_count
        for p, m, v in zip(self.params, self.first_moment, self.second_moment):
            g = p.grad
            if not np.isfinite(g).all():
                raise NonFiniteError("Adam: non-finite gradient")
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            m_hat = m / (1.0 - self.beta1 ** t)
            v_hat = v / (1.0 - self.beta2 ** t)
            p.values -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
            p.zero_grad()
