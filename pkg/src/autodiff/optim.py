"""Adam optimizer."""

from dataclasses import dataclass, field
from typing import Dict, Mapping

import numpy as np

from src.autodiff.tensor import Tensor
from src.utils.exceptions import GradientError


@dataclass
class AdamState:
    """Moment estimates of one parameter."""

    m: np.ndarray
    v: np.ndarray
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def fresh(cls, param: Tensor, beta1: float = 0.9, beta2: float = 0.999,
              eps: float = 1e-8) -> "AdamState":
        return cls(np.zeros_like(param.data), np.zeros_like(param.data), 0, beta1, beta2, eps)


def adam_update(param: Tensor, state: AdamState, lr: float) -> None:
    """Apply one bias-corrected Adam step to ``param`` in place.

    Raises:
        GradientError: If the parameter has no gradient
    """
    if param.grad is None:
        raise GradientError(f"parameter {param.name!r} has no gradient")

    g = param.grad
    state.t += 1
    state.m *= state.beta1
    state.m += (1.0 - state.beta1) * g
    state.v *= state.beta2
    state.v += (1.0 - state.beta2) * (g * g)

    m_hat = state.m / (1.0 - state.beta1 ** state.t)
    v_hat = state.v / (1.0 - state.beta2 ** state.t)
    param.data -= lr * m_hat / (np.sqrt(v_hat) + state.eps)


@dataclass
class Adam:
    """Adam over a named parameter set, one ``AdamState`` per name."""

    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    states: Dict[str, AdamState] = field(default_factory=dict)

    def step(self, params: Mapping[str, Tensor]) -> None:
        for name, param in params.items():
            if name not in self.states:
                self.states[name] = AdamState.fresh(param, self.beta1, self.beta2, self.eps)
            adam_update(param, self.states[name], self.lr)
