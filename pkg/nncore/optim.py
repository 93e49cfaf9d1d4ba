import logging
from typing import Optional, Sequence

import numpy as np

from nncore.layers import Parameter

logger = logging.getLogger(__name__)


def adam_step(params: Sequence[Parameter], grads: Optional[Sequence[np.ndarray]] = None, lr: float = 1e-3,
              step: int = 1, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> None:
    """
    Atualização Adam com correção de viés, in-place. step conta a partir de 1.
    grads=None usa p.grad; gradiente ausente conta como zero.
    """
    if grads is None:
        grads = [p.grad for p in params]
    c1 = 1.0 - beta1 ** step
    c2 = 1.0 - beta2 ** step
    for p, g in zip(params, grads):
        if g is None:
            g = np.zeros_like(p.data)
        p.m = beta1 * p.m + (1.0 - beta1) * g
        p.v = beta2 * p.v + (1.0 - beta2) * g * g
        update = lr * (p.m / c1) / (np.sqrt(p.v / c2) + eps)
        p.data = (p.data - update).astype(p.dtype)


class Adam:
    def __init__(self, params: Sequence[Parameter], lr: float = 1e-3,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = list(params)
        self.lr = lr
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.t = 0

    def zero_grad(self) -> None:
        for p in self.params:
            p.grad = None

    def step(self) -> None:
        self.t += 1
        adam_step(self.params, lr=self.lr, step=self.t, beta1=self.beta1, beta2=self.beta2, eps=self.eps)
