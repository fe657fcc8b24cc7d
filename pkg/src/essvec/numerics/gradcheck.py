"""Finite-difference verification of analytic gradients."""

from dataclasses import dataclass

import numpy as np


@dataclass
class GradCheckReport:
    """Outcome of one finite-difference sweep."""

    max_relative_error: float
    worst_parameter: str
    step_size: float

    def ok(self, tolerance=1e-4):
        return self.max_relative_error < tolerance


def finite_difference_check(loss_fn, grad_fn, theta, step=1e-5, names=None):
    """Compare ``grad_fn`` against central differences of ``loss_fn``.

    ``theta`` is a flat float64 vector; ``loss_fn(theta)`` a scalar;
    ``grad_fn(theta)`` the analytic gradient.  The reported error is
    max_i |a_i - n_i| / max(max|a|, max|n|, 1e-12), i.e. the worst absolute
    deviation normalized by the overall gradient scale, which keeps tiny
    near-zero coordinates from dominating.
    """
    theta = np.ascontiguousarray(theta, dtype=np.float64)
    analytic = np.asarray(grad_fn(theta), dtype=np.float64)
    if analytic.shape != theta.shape:
        raise ValueError("analytic gradient shape does not match theta")
    numeric = np.empty_like(theta)
    work = theta.copy()
    for i in range(theta.size):
        orig = work[i]
        work[i] = orig + step
        up = loss_fn(work)
        work[i] = orig - step
        down = loss_fn(work)
        work[i] = orig
        numeric[i] = (up - down) / (2.0 * step)
    diff = np.abs(analytic - numeric)
    scale = max(np.abs(analytic).max(initial=0.0),
                np.abs(numeric).max(initial=0.0), 1e-12)
    worst = int(np.argmax(diff))
    name = names[worst] if names is not None else f"theta[{worst}]"
    return GradCheckReport(max_relative_error=float(diff[worst] / scale),
                           worst_parameter=name, step_size=float(step))
