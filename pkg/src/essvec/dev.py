"""Denoising essence vectors.

Same encoder/decoder graph as the base model, trained on noisy text, plus a
second decoder ``s`` that must reconstruct the *clean* transcript
distribution from the very same mixed code.  The objective is the base
reconstruction loss with one extra KL term, so the embedding is pushed to
keep whatever survives the noise.
"""

import copy
import logging
from dataclasses import dataclass

import numpy as np

from .corpus import BowVector
from .ev import (EvArchitecture, EvGradients, EvModelParams, EpochStats,
                 ForwardTrace, TrainingDiverged, _check_finite,
                 _init_ev_params_from_rng, _mix_backward, _softmax_kl_delta,
                 _adam_state, background_forward, ev_loss, named_arrays,
                 paragraph_forward)
from .numerics.adam import adam_step
from .numerics.dense import (init_layers, kl_divergence, stack_backward,
                             stack_forward, zeros_grads)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class DevArchitecture(EvArchitecture):
    """Adds the clean-transcript decoder widths.

    ``s_hidden=None`` mirrors the ``h`` decoder's hidden widths.
    """

    s_hidden: tuple = None

    def __post_init__(self):
        super().__post_init__()
        if self.s_hidden is None:
            object.__setattr__(self, "s_hidden", self.h_hidden)
        else:
            object.__setattr__(self, "s_hidden", tuple(self.s_hidden))
        if any(w < 1 for w in self.s_hidden):
            raise ValueError("hidden widths must be >= 1")

    def s_dims(self):
        return (self.embedding_dim, *self.s_hidden, self.vocab_dim)


@dataclass(frozen=True)
class PairedExample:
    """A noisy paragraph distribution with its clean counterpart."""

    noisy: BowVector
    clean: BowVector

    def __post_init__(self):
        if self.noisy.dim != self.clean.dim:
            raise ValueError("noisy and clean distributions must share a "
                             "vocabulary")


@dataclass
class DevModelParams:
    """Shared base-model weights plus the clean-transcript decoder."""

    ev: EvModelParams
    s_layers: list

    @property
    def architecture(self):
        return self.ev.architecture

    def stacks(self):
        return self.ev.stacks() + [("s", self.s_layers)]

    def arrays(self):
        return named_arrays(self.stacks())

    def n_parameters(self):
        return sum(a.size for _, a in self.arrays())

    def copy(self):
        return copy.deepcopy(self)


def init_dev_params(arch, seed):
    """Glorot-uniform weights for all four networks from one seeded rng."""
    rng = np.random.default_rng(seed)
    return DevModelParams(
        ev=_init_ev_params_from_rng(arch, rng),
        s_layers=init_layers(arch.s_dims(), "softmax", rng))


def dev_params_from_ev(ev_params, arch, seed):
    """Staged start: adopt trained base stacks, draw a fresh clean decoder."""
    if arch.vocab_dim != ev_params.architecture.vocab_dim or \
            arch.embedding_dim != ev_params.architecture.embedding_dim:
        raise ValueError("architecture does not match the donor parameters")
    rng = np.random.default_rng(seed)
    return DevModelParams(
        ev=ev_params.copy(),
        s_layers=init_layers(arch.s_dims(), "softmax", rng))


@dataclass
class DevGradients(EvGradients):
    s: list = None

    @classmethod
    def zeros(cls, params):
        return cls(f=zeros_grads(params.ev.f_layers),
                   g=zeros_grads(params.ev.g_layers),
                   h=zeros_grads(params.ev.h_layers),
                   s=zeros_grads(params.s_layers))

    def stacks(self):
        return super().stacks() + [("s", self.s)]


@dataclass
class DevForwardTrace(ForwardTrace):
    """Base trace plus the clean-transcript reconstruction."""

    p_clean_reconstructed: np.ndarray = None
    s_cache: object = None


def dev_forward(params, pair, p_bg):
    """Base forward on the noisy distribution, plus the clean decoder
    applied to the same mixed code."""
    if pair.noisy.dim != params.architecture.vocab_dim or \
            p_bg.dim != params.architecture.vocab_dim:
        raise ValueError("distribution dimension does not match the model")
    return _dev_paragraph_forward(params, pair,
                                  background_forward(params.ev, p_bg))


def _dev_paragraph_forward(params, pair, bg):
    base = paragraph_forward(params.ev, pair.noisy, bg)
    q_clean, s_cache = stack_forward(params.s_layers, base.mixed_code)
    return DevForwardTrace(
        v_paragraph=base.v_paragraph, v_background=base.v_background,
        alpha=base.alpha, raw_alpha=base.raw_alpha, cos=base.cos,
        alpha_gate=base.alpha_gate, mixed_code=base.mixed_code,
        p_reconstructed=base.p_reconstructed,
        p_bg_reconstructed=base.p_bg_reconstructed, f_cache=base.f_cache,
        g_cache=base.g_cache, h_cache=base.h_cache,
        h_bg_cache=base.h_bg_cache, p_clean_reconstructed=q_clean,
        s_cache=s_cache)


def dev_loss(trace, pair, p_bg, background_weight=1.0, clean_weight=1.0):
    """Base loss plus KL(clean || clean reconstruction).

    Computed literally as that sum, so the identity with the base loss
    holds bit for bit.
    """
    loss = ev_loss(trace, pair.noisy, p_bg, background_weight)
    if clean_weight != 0.0:
        loss += clean_weight * kl_divergence(pair.clean,
                                             trace.p_clean_reconstructed)
    return loss


def dev_backward(params, trace, pair, p_bg, background_weight=1.0,
                 clean_weight=1.0):
    """Analytic gradients of :func:`dev_loss` over all four networks.

    Both decoders sit on the same mixed code, so their input gradients are
    summed before differentiating the attention mix; the clean term reaches
    the encoders and the attention through that shared code.
    """
    grads = DevGradients.zeros(params)
    delta_mix = _decoder_backward(params, trace, pair, grads, clean_weight)
    grad_vp, grad_vbg = _mix_backward(trace, delta_mix)
    stack_backward(params.ev.f_layers, trace.f_cache, grad_vp, grads.f,
                   top_is_logit_grad=False)
    if background_weight != 0.0:
        delta2 = _softmax_kl_delta(trace.p_bg_reconstructed, p_bg)
        if background_weight != 1.0:
            delta2 *= background_weight
        grad_vbg = grad_vbg + stack_backward(
            params.ev.h_layers, trace.h_bg_cache, delta2, grads.h,
            top_is_logit_grad=True, need_input_grad=True)
    stack_backward(params.ev.g_layers, trace.g_cache, grad_vbg, grads.g,
                   top_is_logit_grad=False)
    _check_finite(grads)
    return grads


def _decoder_backward(params, trace, pair, grads, clean_weight):
    """Backprop both decoders; returns the summed mixed-code gradient."""
    delta1 = _softmax_kl_delta(trace.p_reconstructed, pair.noisy)
    delta_mix = stack_backward(params.ev.h_layers, trace.h_cache, delta1,
                               grads.h, top_is_logit_grad=True,
                               need_input_grad=True)
    if clean_weight != 0.0:
        delta3 = _softmax_kl_delta(trace.p_clean_reconstructed, pair.clean)
        if clean_weight != 1.0:
            delta3 *= clean_weight
        delta_mix = delta_mix + stack_backward(
            params.s_layers, trace.s_cache, delta3, grads.s,
            top_is_logit_grad=True, need_input_grad=True)
    return delta_mix


def _dev_batch_step(params, batch, p_bg, grads, config):
    """Batch-mean gradient, background path shared across the batch.

    Returns per-example (paragraph KL, clean KL) pairs and the step's
    background KL.
    """
    bw = config.background_weight
    bg = background_forward(params.ev, p_bg)
    bg_kl = kl_divergence(p_bg, bg.p_bg_reconstructed) if bw != 0.0 else 0.0
    grads.zero_()
    vbg_delta = np.zeros_like(bg.v_background)
    kls = []
    for pair in batch:
        trace = _dev_paragraph_forward(params, pair, bg)
        kls.append((kl_divergence(pair.noisy, trace.p_reconstructed),
                    kl_divergence(pair.clean, trace.p_clean_reconstructed)))
        delta_mix = _decoder_backward(params, trace, pair, grads, 1.0)
        grad_vp, grad_vbg = _mix_backward(trace, delta_mix)
        stack_backward(params.ev.f_layers, trace.f_cache, grad_vp, grads.f,
                       top_is_logit_grad=False)
        vbg_delta += grad_vbg
    inv = 1.0 / len(batch)
    grads.scale_(inv)
    vbg_delta *= inv
    if bw != 0.0:
        delta2 = _softmax_kl_delta(bg.p_bg_reconstructed, p_bg)
        if bw != 1.0:
            delta2 *= bw
        vbg_delta += stack_backward(params.ev.h_layers, bg.h_bg_cache,
                                    delta2, grads.h, top_is_logit_grad=True,
                                    need_input_grad=True)
    stack_backward(params.ev.g_layers, bg.g_cache, vbg_delta, grads.g,
                   top_is_logit_grad=False)
    return kls, bg_kl


def train_dev(pairs, p_bg, arch, config, init_params=None):
    """Minibatch Adam on the denoising objective.

    By default all four networks train jointly from a fresh seeded
    initialization.  Pass ``init_params`` (a full parameter set, or one
    built by :func:`dev_params_from_ev` from a trained base model) for a
    staged start instead.  Deterministic per seed; raises
    :class:`TrainingDiverged` with the last finished epoch's parameters if
    the loss goes non-finite.
    """
    if not pairs:
        raise ValueError("training corpus is empty")
    rng = np.random.default_rng(config.seed)
    if init_params is None:
        params = DevModelParams(
            ev=_init_ev_params_from_rng(arch, rng),
            s_layers=init_layers(arch.s_dims(), "softmax", rng))
    elif isinstance(init_params, DevModelParams):
        params = init_params.copy()
    else:
        params = dev_params_from_ev(init_params, arch, config.seed)
    names = [n for n, _ in params.arrays()]
    state = _adam_state(params, config)
    grads = DevGradients.zeros(params)
    history = []
    checkpoint = params.copy()
    n = len(pairs)
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(n) if config.shuffle else np.arange(n)
        sum_para = 0.0
        sum_clean = 0.0
        sum_bg = 0.0
        try:
            for start in range(0, n, config.batch_size):
                batch = [pairs[i] for i in order[start:start +
                                                 config.batch_size]]
                kls, bg_kl = _dev_batch_step(params, batch, p_bg, grads,
                                             config)
                sum_para += sum(k for k, _ in kls)
                sum_clean += sum(c for _, c in kls)
                sum_bg += bg_kl * len(batch)
                adam_step([a for _, a in params.arrays()], grads.arrays(),
                          state, names=names)
        except FloatingPointError as exc:
            raise TrainingDiverged(
                f"epoch {epoch}: {exc}", checkpoint, history) from exc
        mean_para = sum_para / n
        mean_clean = sum_clean / n
        mean_bg = sum_bg / n
        mean_loss = mean_para + mean_clean + \
            config.background_weight * mean_bg
        if not np.isfinite(mean_loss):
            raise TrainingDiverged(f"epoch {epoch}: loss is {mean_loss}",
                                   checkpoint, history)
        history.append(EpochStats(epoch=epoch, mean_loss=mean_loss,
                                  paragraph_kl=mean_para,
                                  background_kl=mean_bg,
                                  clean_kl=mean_clean))
        checkpoint = params.copy()
        log.info("epoch %d: loss %.6f (paragraph %.6f, background %.6f, "
                 "clean %.6f)", epoch, mean_loss, mean_para, mean_bg,
                 mean_clean)
    return params, history
