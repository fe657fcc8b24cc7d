"""Dense-layer kernels: affine layers, tanh/softmax activations, KL
divergence, and cosine similarity.

Everything is double precision.  Inputs may be dense 1-D arrays or sparse
distributions (any object with ``indices``/``weights``/``dim`` attributes,
e.g. :class:`essvec.corpus.BowVector`).
"""

from dataclasses import dataclass, field

import numpy as np

from . import backend

ACTIVATIONS = ("tanh", "softmax", "identity")


class DegenerateDistributionError(FloatingPointError):
    """A reconstruction has zero mass on an observed word.

    Softmax underflows to exact zero once logits spread past ~745 nats, at
    which point KL(p || q) is undefined.  This is a numeric blow-up, not a
    caller error, so training loops treat it like any other non-finite
    result.
    """


def _is_sparse(x):
    return hasattr(x, "indices") and hasattr(x, "weights")


@dataclass
class DenseLayer:
    """One fully connected layer: ``activation(weight @ x + bias)``."""

    weight: np.ndarray  # [out_dim, in_dim]
    bias: np.ndarray  # [out_dim]
    activation: str = "tanh"

    def __post_init__(self):
        self.weight = np.ascontiguousarray(self.weight, dtype=np.float64)
        self.bias = np.ascontiguousarray(self.bias, dtype=np.float64)
        if self.weight.ndim != 2 or self.bias.ndim != 1:
            raise ValueError("weight must be 2-D and bias 1-D")
        if self.weight.shape[0] != self.bias.shape[0]:
            raise ValueError(
                f"bias length {self.bias.shape[0]} does not match "
                f"weight rows {self.weight.shape[0]}")
        if not (np.isfinite(self.weight).all() and np.isfinite(self.bias).all()):
            raise ValueError("layer parameters must be finite")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")

    @property
    def out_dim(self):
        return self.weight.shape[0]

    @property
    def in_dim(self):
        return self.weight.shape[1]


def _affine_into(layer, x, out):
    K = backend.kernels
    if _is_sparse(x):
        K.affine_sparse(layer.weight, layer.bias, x.indices, x.weights, out)
    else:
        K.affine(layer.weight, layer.bias, x, out)
    if layer.activation == "tanh":
        K.tanh_inplace(out)
    elif layer.activation == "softmax":
        K.softmax_inplace(out)


def dense_forward(layer, x):
    """Apply one layer to a 1-D input, with dimension checks."""
    n = x.weights.shape[0] if _is_sparse(x) else len(x)
    dim = x.dim if _is_sparse(x) else len(x)
    if dim != layer.in_dim:
        raise ValueError(f"input dim {dim} != layer in_dim {layer.in_dim}")
    if _is_sparse(x) and n and int(x.indices[-1]) >= layer.in_dim:
        raise ValueError("sparse index out of range for layer input")
    if not _is_sparse(x):
        x = np.ascontiguousarray(x, dtype=np.float64)
    out = np.empty(layer.out_dim)
    _affine_into(layer, x, out)
    return out


def init_layers(dims, final_activation, rng):
    """Build a layer stack for the width chain ``dims``.

    Hidden layers are tanh; the last layer uses ``final_activation``.
    Weights are uniform on +/- sqrt(6 / (fan_in + fan_out)), biases zero.
    """
    if len(dims) < 2:
        raise ValueError("need at least input and output widths")
    layers = []
    for i, (n_in, n_out) in enumerate(zip(dims[:-1], dims[1:])):
        limit = np.sqrt(6.0 / (n_in + n_out))
        weight = rng.uniform(-limit, limit, size=(n_out, n_in))
        act = final_activation if i == len(dims) - 2 else "tanh"
        layers.append(DenseLayer(weight, np.zeros(n_out), act))
    return layers


@dataclass
class StackCache:
    """Activations recorded by :func:`stack_forward` for the backward pass."""

    x0: object  # dense array or sparse distribution
    outputs: list = field(default_factory=list)  # per-layer post-activation


def stack_forward(layers, x):
    """Run ``x`` through a layer stack; returns (output, cache)."""
    cache = StackCache(x0=x)
    cur = x
    for layer in layers:
        out = np.empty(layer.out_dim)
        _affine_into(layer, cur, out)
        cache.outputs.append(out)
        cur = out
    return cur, cache


def zeros_grads(layers):
    """Gradient buffers shaped like each layer's (weight, bias)."""
    return [(np.zeros_like(l.weight), np.zeros_like(l.bias)) for l in layers]


def stack_backward(layers, cache, delta, grads, top_is_logit_grad,
                   need_input_grad=False, scale=1.0):
    """Backpropagate through a stack, accumulating into ``grads``.

    ``delta`` is the loss gradient at the stack output: with
    ``top_is_logit_grad`` it is taken w.r.t. the top layer's pre-activation
    (the softmax+KL shortcut), otherwise w.r.t. the top activation output.
    Returns the gradient w.r.t. the stack input when ``need_input_grad``,
    else None.  ``scale`` multiplies every accumulated contribution.
    """
    K = backend.kernels
    n = len(layers)
    cur = np.array(delta, dtype=np.float64)
    if scale != 1.0:
        cur *= scale
    for i in range(n - 1, -1, -1):
        layer = layers[i]
        y = cache.outputs[i]
        if i == n - 1 and top_is_logit_grad:
            delta_pre = cur
        elif layer.activation == "tanh":
            delta_pre = np.empty_like(cur)
            K.tanh_backward(y, cur, delta_pre)
        elif layer.activation == "identity":
            delta_pre = cur
        else:
            raise NotImplementedError(
                "softmax backward is only supported through the KL logit "
                "shortcut at the top of a stack")
        x_in = cache.outputs[i - 1] if i > 0 else cache.x0
        gW, gb = grads[i]
        if i == 0 and _is_sparse(x_in):
            K.affine_backward_params_sparse(
                x_in.indices, x_in.weights, delta_pre, gW, gb)
            if need_input_grad:
                raise ValueError("cannot take input gradient of a sparse input")
            return None
        K.affine_backward_params(x_in, delta_pre, gW, gb)
        if i > 0 or need_input_grad:
            gx = np.empty(layer.in_dim)
            K.affine_backward_input(layer.weight, delta_pre, gx)
            cur = gx
    return cur if need_input_grad else None


def softmax(z):
    """Softmax of a 1-D array (max-subtracted)."""
    out = np.ascontiguousarray(z, dtype=np.float64).copy()
    backend.kernels.softmax_inplace(out)
    return out


def kl_divergence(p, q):
    """KL(p || q) with the 0*log(0)=0 convention.

    ``p`` is a unit-sum distribution, dense or sparse; ``q`` must be
    strictly positive wherever ``p`` is.
    """
    q = np.ascontiguousarray(q, dtype=np.float64)
    if _is_sparse(p):
        if p.dim != q.shape[0]:
            raise ValueError(f"dimension mismatch: p has {p.dim}, q has {q.shape[0]}")
        if p.weights.size and np.any(q[p.indices] <= 0.0):
            raise DegenerateDistributionError(
                "q has a zero (or negative) entry where p is positive")
        return backend.kernels.kl_div(p.indices, p.weights, q)
    p = np.asarray(p, dtype=np.float64)
    if p.shape != q.shape:
        raise ValueError(f"shape mismatch: {p.shape} vs {q.shape}")
    if np.any(p < 0):
        raise ValueError("p must be nonnegative")
    if abs(p.sum() - 1.0) > 1e-6:
        raise ValueError("p must sum to 1")
    support = p > 0
    if np.any(q[support] <= 0.0):
        raise DegenerateDistributionError(
            "q has a zero (or negative) entry where p is positive")
    ps = p[support]
    return float(np.dot(ps, np.log(ps) - np.log(q[support])))


def cosine_similarity(a, b):
    """a.b / (|a| |b|), clipped to [-1, 1]; zero-norm inputs are an error."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine similarity of a zero-norm vector")
    return float(min(1.0, max(-1.0, np.dot(a, b) / (na * nb))))
