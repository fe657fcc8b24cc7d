"""Pure-numpy implementations of the hot training kernels.

Mirrors the compiled ``_ckernels`` extension function-for-function; the
active implementation is chosen in :mod:`essvec.numerics.backend`.  All
arrays are C-contiguous float64 (indices int64).  These functions do not
validate shapes; callers in :mod:`essvec.numerics.dense` do.
"""

import numpy as np

NAME = "python"


def affine(W, b, x, out):
    """out = W @ x + b."""
    np.matmul(W, x, out=out)
    out += b


def affine_sparse(W, b, idx, val, out):
    """out = W[:, idx] @ val + b for a sparse input vector."""
    np.matmul(W[:, idx], val, out=out)
    out += b


def tanh_inplace(z):
    np.tanh(z, out=z)


def softmax_inplace(z):
    """Softmax with max subtraction for overflow safety."""
    z -= z.max()
    np.exp(z, out=z)
    z /= z.sum()


def tanh_backward(y, grad_y, out):
    """out = grad_y * (1 - y**2) where y = tanh(pre-activation)."""
    np.multiply(y, y, out=out)
    np.subtract(1.0, out, out=out)
    out *= grad_y


def affine_backward_params(x, delta, gW, gb):
    """Accumulate gW += outer(delta, x); gb += delta."""
    gW += np.multiply.outer(delta, x)
    gb += delta


def affine_backward_params_sparse(idx, val, delta, gW, gb):
    """Sparse-input variant: only the touched columns of gW change."""
    gW[:, idx] += np.multiply.outer(delta, val)
    gb += delta


def affine_backward_input(W, delta, gx):
    """gx = W.T @ delta."""
    np.matmul(W.T, delta, out=gx)


def kl_div(idx, val, q):
    """Sum of val * log(val / q[idx]); entries of val are strictly positive."""
    return float(np.dot(val, np.log(val) - np.log(q[idx])))


def softmax_kl_delta(q, idx, val, out):
    """Gradient of KL(p || softmax(z)) w.r.t. the logits z: q - p."""
    out[:] = q
    out[idx] -= val


def adam_update(p, g, m, v, t, lr, beta1, beta2, eps):
    """One bias-corrected Adam step over flat arrays, in place."""
    m *= beta1
    m += (1.0 - beta1) * g
    v *= beta2
    v += (1.0 - beta2) * np.square(g)
    mhat = m / (1.0 - beta1 ** t)
    vhat = v / (1.0 - beta2 ** t)
    p -= lr * mhat / (np.sqrt(vhat) + eps)
