"""Self-diagnosis harness: finite-difference verification of the analytic
gradients on randomly drawn toy instances.

Instances are redrawn if the attention lands within 1e-3 of its clamp
boundary, where the loss is non-differentiable and central differences
straddle the kink.
"""

import numpy as np

from .corpus import BowVector
from .dev import (DevArchitecture, PairedExample, dev_backward, dev_forward,
                  dev_loss, init_dev_params)
from .ev import (EvArchitecture, ev_backward, ev_loss, flatten_arrays,
                 forward, init_ev_params, set_params_flat, parameter_names,
                 _attention_full)
from .numerics.gradcheck import finite_difference_check

BOUNDARY_MARGIN = 1e-3
MAX_REDRAWS = 50


def random_bow(rng, dim, min_support=1):
    """Random sparse unit-sum distribution over ``dim`` words."""
    support = int(rng.integers(min_support, dim + 1))
    indices = np.sort(rng.choice(dim, size=support, replace=False))
    weights = rng.random(support) + 0.1
    weights /= weights.sum()
    return BowVector(indices=indices.astype(np.int64),
                     weights=weights, dim=dim)


def _away_from_clamp(params, p, p_bg):
    trace = forward(params if not hasattr(params, "ev") else params.ev,
                    p, p_bg)
    floor = params.architecture.attention_floor
    return (trace.alpha_gate == 1.0 and
            abs(trace.raw_alpha - floor) > BOUNDARY_MARGIN and
            abs(trace.raw_alpha - (1.0 - floor)) > BOUNDARY_MARGIN)


def _draw_instance(arch, seed, make_params):
    """Parameters plus inputs whose attention sits inside the clamp."""
    rng = np.random.default_rng(seed)
    for attempt in range(MAX_REDRAWS):
        params = make_params(arch, int(rng.integers(2 ** 31)))
        p = random_bow(rng, arch.vocab_dim)
        p_bg = random_bow(rng, arch.vocab_dim, min_support=2)
        if _away_from_clamp(params, p, p_bg):
            return params, p, p_bg
    raise RuntimeError("could not draw an instance away from the "
                       f"attention clamp in {MAX_REDRAWS} tries")


def check_ev_gradients(arch, seed, step=1e-5):
    """Finite-difference report for the base objective on a toy model."""
    params, p, p_bg = _draw_instance(arch, seed, init_ev_params)
    theta0 = flatten_arrays([a for _, a in params.arrays()])

    def loss_fn(theta):
        set_params_flat(params, theta)
        return ev_loss(forward(params, p, p_bg), p, p_bg)

    def grad_fn(theta):
        set_params_flat(params, theta)
        grads = ev_backward(params, forward(params, p, p_bg), p, p_bg)
        return flatten_arrays(grads.arrays())

    return finite_difference_check(loss_fn, grad_fn, theta0, step=step,
                                   names=parameter_names(params))


def check_dev_gradients(arch, seed, step=1e-5):
    """Finite-difference report for the denoising objective."""
    params, noisy, p_bg = _draw_instance(arch, seed, init_dev_params)
    rng = np.random.default_rng(seed + 104729)
    clean = random_bow(rng, arch.vocab_dim)
    pair = PairedExample(noisy=noisy, clean=clean)
    theta0 = flatten_arrays([a for _, a in params.arrays()])

    def loss_fn(theta):
        set_params_flat(params, theta)
        return dev_loss(dev_forward(params, pair, p_bg), pair, p_bg)

    def grad_fn(theta):
        set_params_flat(params, theta)
        grads = dev_backward(params, dev_forward(params, pair, p_bg),
                             pair, p_bg)
        return flatten_arrays(grads.arrays())

    return finite_difference_check(loss_fn, grad_fn, theta0, step=step,
                                   names=parameter_names(params))


def toy_architecture(vocab_dim=8, embedding_dim=3, hidden=(5,), dev=False):
    if dev:
        return DevArchitecture(vocab_dim=vocab_dim,
                               embedding_dim=embedding_dim,
                               f_hidden=hidden, g_hidden=hidden,
                               h_hidden=hidden, s_hidden=hidden)
    return EvArchitecture(vocab_dim=vocab_dim, embedding_dim=embedding_dim,
                          f_hidden=hidden, g_hidden=hidden, h_hidden=hidden)
