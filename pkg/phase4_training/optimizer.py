"""Adam with bias correction."""

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from autodiff.tensor import Parameter


@dataclass(frozen=True)
class AdamHyper:
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


@dataclass
class AdamState:
    """First and second moments per parameter and the step counter."""

    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)
    t: int = 0

    @classmethod
    def zeros_like(cls, params: Sequence[np.ndarray]) -> "AdamState":
        return cls([np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params], 0)


def adam_step(params: Sequence[np.ndarray], grads: Sequence[Optional[np.ndarray]],
              state: AdamState, hyper: AdamHyper = AdamHyper()) -> list[np.ndarray]:
    """One update; returns new parameter arrays and advances `state` in place.

    m <- b1 m + (1 - b1) g;  v <- b2 v + (1 - b2) g^2;
    theta <- theta - lr * m_hat / (sqrt(v_hat) + eps)
    A missing gradient counts as zero.
    """
    if not state.m:
        state.m = [np.zeros_like(p) for p in params]
        state.v = [np.zeros_like(p) for p in params]
    state.t += 1
    c1 = 1.0 - hyper.beta1 ** state.t
    c2 = 1.0 - hyper.beta2 ** state.t
    updated = []
    for i, (p, g) in enumerate(zip(params, grads)):
        if g is None:
            g = np.zeros_like(p)
        state.m[i] = hyper.beta1 * state.m[i] + (1 - hyper.beta1) * g
        state.v[i] = hyper.beta2 * state.v[i] + (1 - hyper.beta2) * (g * g)
        m_hat = state.m[i] / c1
        v_hat = state.v[i] / c2
        updated.append((p - hyper.lr * m_hat / (np.sqrt(v_hat) + hyper.eps)).astype(p.dtype))
    return updated


class Adam:
    def __init__(self, params: Sequence[Parameter], hyper: AdamHyper = AdamHyper()):
        self.params = list(params)
        self.hyper = hyper
        self.state = AdamState.zeros_like([p.data for p in self.params])

    def step(self) -> None:
        new = adam_step([p.data for p in self.params], [p.grad for p in self.params],
                        self.state, self.hyper)
        for p, data in zip(self.params, new):
            p.data = data

    def zero_grad(self) -> None:
        for p in self.params:
            p.zero_grad()
