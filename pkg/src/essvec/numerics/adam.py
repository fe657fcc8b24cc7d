"""Adam optimizer over flat lists of parameter arrays."""

from dataclasses import dataclass

import numpy as np

from . import backend


@dataclass
class AdamState:
    """Per-parameter moment accumulators plus hyperparameters."""

    first_moment: list
    second_moment: list
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step: int = 0

    def __post_init__(self):
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ValueError("beta1 and beta2 must lie in [0, 1)")
        if self.epsilon <= 0.0:
            raise ValueError("epsilon must be positive")
        if self.step < 0:
            raise ValueError("step must be nonnegative")

    @classmethod
    def init(cls, params, learning_rate=1e-3, beta1=0.9, beta2=0.999,
             epsilon=1e-8):
        """Fresh zero-moment state shaped like ``params`` (list of arrays)."""
        return cls(first_moment=[np.zeros_like(p) for p in params],
                   second_moment=[np.zeros_like(p) for p in params],
                   learning_rate=learning_rate, beta1=beta1, beta2=beta2,
                   epsilon=epsilon)


def adam_step(params, grads, state, names=None):
    """One bias-corrected Adam update, in place over ``params``.

    ``params`` and ``grads`` are parallel lists of arrays matched to the
    moment buffers in ``state``.  Non-finite gradients raise, naming the
    offending parameter.  Returns ``(params, state)``.
    """
    if len(params) != len(grads) or len(params) != len(state.first_moment):
        raise ValueError("params, grads, and state must have the same layout")
    for i, (p, g) in enumerate(zip(params, grads)):
        if p.shape != g.shape:
            name = names[i] if names else f"param[{i}]"
            raise ValueError(f"gradient shape mismatch for {name}: "
                             f"{g.shape} vs {p.shape}")
        if not np.isfinite(g).all():
            name = names[i] if names else f"param[{i}]"
            raise FloatingPointError(f"non-finite gradient for {name}")
    state.step += 1
    for p, g, m, v in zip(params, grads, state.first_moment,
                          state.second_moment):
        backend.kernels.adam_update(
            p.reshape(-1), np.ascontiguousarray(g, dtype=np.float64).reshape(-1),
            m.reshape(-1), v.reshape(-1), state.step, state.learning_rate,
            state.beta1, state.beta2, state.epsilon)
    return params, state
