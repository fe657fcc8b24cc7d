"""Minimal dense-network numerics: layers, activations, KL loss, Adam, and
a finite-difference gradient checker.

Hot kernels live in a compiled extension with a numpy fallback; see
:mod:`essvec.numerics.backend`.
"""

from .adam import AdamState, adam_step
from .backend import (active_backend, available_backends, set_backend,
                      use_backend)
from .dense import (ACTIVATIONS, DenseLayer, StackCache, cosine_similarity,
                    dense_forward, init_layers, kl_divergence, softmax,
                    stack_backward, stack_forward, zeros_grads)
from .gradcheck import GradCheckReport, finite_difference_check

__all__ = [
    "ACTIVATIONS",
    "AdamState",
    "DenseLayer",
    "GradCheckReport",
    "StackCache",
    "active_backend",
    "adam_step",
    "available_backends",
    "cosine_similarity",
    "dense_forward",
    "finite_difference_check",
    "init_layers",
    "kl_divergence",
    "set_backend",
    "softmax",
    "stack_backward",
    "stack_forward",
    "use_backend",
    "zeros_grads",
]
