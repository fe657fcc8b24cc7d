"""Principal components by power iteration with deflation.

Deterministic: start vectors come from a fixed internal generator, and
each component's sign is normalized so its largest-magnitude entry is
positive.  Kept free of ``np.linalg`` eigensolvers so those remain an
independent cross-check.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PcaModel:
    """Mean, row-orthonormal components [k x d], per-component variance."""

    mean: np.ndarray
    components: np.ndarray
    explained_variance: np.ndarray


def _power_iterate(cov, start, found, max_iter, tol):
    """Leading eigenvector of ``cov`` orthogonal to the rows in ``found``."""
    v = start.copy()
    for row in found:
        v -= np.dot(v, row) * row
    norm = np.linalg.norm(v)
    if norm == 0.0:
        return None, 0.0
    v /= norm
    for _ in range(max_iter):
        w = cov @ v
        for row in found:
            w -= np.dot(w, row) * row
        norm = np.linalg.norm(w)
        if norm < tol:
            return None, 0.0  # no variance left in this subspace
        w /= norm
        if 1.0 - abs(float(np.dot(w, v))) < 1e-14:
            v = w
            break
        v = w
    eigenvalue = float(v @ (cov @ v))
    return v, eigenvalue


def _fix_sign(v):
    return -v if v[int(np.argmax(np.abs(v)))] < 0 else v


def pca_fit(data, k, max_iter=1000, allow_degenerate=False):
    """Top-k principal components of mean-centered data.

    With ``allow_degenerate`` directions of (numerically) zero variance
    come back as zero rows instead of raising.
    """
    x = np.asarray(data, dtype=np.float64)
    if x.ndim != 2:
        x = np.stack([np.asarray(row, dtype=np.float64) for row in data])
    n, d = x.shape
    if not 1 <= k <= min(n, d):
        raise ValueError(f"k = {k} must lie in [1, min(n, d) = "
                         f"{min(n, d)}]")
    mean = x.mean(axis=0)
    centered = x - mean
    cov = (centered.T @ centered) / (n - 1) if n > 1 else \
        np.zeros((d, d))
    scale = max(float(np.trace(cov)), 1.0)
    tol = 1e-13 * scale
    rng = np.random.default_rng(0)
    components = []
    variances = []
    for _ in range(k):
        vec, eigenvalue = _power_iterate(cov, rng.standard_normal(d),
                                         components, max_iter, tol)
        if vec is None or eigenvalue < tol:
            if not allow_degenerate:
                raise ValueError("remaining variance is numerically zero; "
                                 "reduce k or pass allow_degenerate=True")
            components.append(np.zeros(d))
            variances.append(0.0)
            continue
        components.append(_fix_sign(vec))
        variances.append(eigenvalue)
    return PcaModel(mean=mean, components=np.array(components),
                    explained_variance=np.array(variances))


def pca_transform(model, x):
    """Project onto the components: components @ (x - mean)."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != model.mean.shape[0]:
        raise ValueError(f"input dimension {x.shape[-1]} != model "
                         f"dimension {model.mean.shape[0]}")
    return (x - model.mean) @ model.components.T


def pca_reconstruct(model, z):
    """Back-projection of coordinates into the original space."""
    z = np.asarray(z, dtype=np.float64)
    if z.shape[-1] != model.components.shape[0]:
        raise ValueError("coordinate dimension does not match the model")
    return z @ model.components + model.mean
