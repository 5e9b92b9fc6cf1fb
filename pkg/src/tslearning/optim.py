"""Adam with bias correction, and a step learning-rate schedule."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .autodiff import Tensor, UsageError


@dataclass(frozen=True)
class LrSchedule:
    base_lr: float = 0.001
    decay_every: int = 50
    decay_factor: float = 0.1

    def __post_init__(self):
        if self.base_lr < 0 or self.decay_every <= 0 or not 0 < self.decay_factor <= 1:
            raise ValueError(f"invalid schedule {self}")


def lr_at(schedule: LrSchedule, epoch: int) -> float:
    """``base_lr * decay_factor ** (epoch // decay_every)``."""
    if epoch < 0:
        raise ValueError("epoch must be non-negative")
    return schedule.base_lr * schedule.decay_factor ** (epoch // schedule.decay_every)


class Adam:
    """Adam over a fixed list of tensors.

    ``step`` consumes the gradients it applies: every ``grad`` buffer is
    cleared afterwards, so a stale gradient can never be applied twice.
    """

    def __init__(self, params: Sequence[Tensor], lr: float = 0.001, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.params = list(params)
        for p in self.params:
            if not p.requires_grad:
                raise UsageError(f"parameter {p.name or '?'} is frozen and cannot be optimized")
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]

    def step(self) -> None:
        for p in self.params:
            if not p.requires_grad or not p.data.flags.writeable:
                raise UsageError(f"parameter {p.name or '?'} is frozen")
            if p.grad is None:
                raise UsageError(f"parameter {p.name or '?'} has no gradient; run backward first")
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        c1 = 1.0 - b1**self.t
        c2 = 1.0 - b2**self.t
        for p, m, v in zip(self.params, self.m, self.v):
            g = p.grad
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * (g * g)
            m_hat = m / c1
            v_hat = v / c2
            p.data -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
            p.grad = None

    def state_dict(self) -> dict:
        return {"t": self.t, "m": [a.copy() for a in self.m], "v": [a.copy() for a in self.v]}


__all__ = ["Adam", "LrSchedule", "lr_at"]
