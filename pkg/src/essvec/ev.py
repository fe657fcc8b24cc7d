"""The essence-vector paragraph embedding model.

A paragraph's unit-sum bag-of-words distribution is encoded by ``f`` into a
low-dimensional code; the corpus-wide background distribution is encoded by
``g``.  A decoder ``h`` must reconstruct the paragraph distribution from a
mix ``alpha * v_p + (1 - alpha) * v_bg`` of the two codes, and the
background distribution from the background code alone.  ``alpha`` is
derived from the cosine distance between the codes.  Both reconstructions
are scored with KL divergence, and the whole graph (attention included) is
trained by hand-derived backprop with Adam.

At inference time only ``f`` is used: a paragraph's embedding is
``encode_paragraph(params, bow)``.
"""

import copy
import logging
from dataclasses import dataclass, field

import numpy as np

from .numerics import backend
from .numerics.adam import AdamState, adam_step
from .numerics.dense import (init_layers, kl_divergence, stack_backward,
                             stack_forward, zeros_grads)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class EvArchitecture:
    """Widths of the three networks plus the attention clamp.

    ``f_hidden``/``g_hidden``/``h_hidden`` are the hidden-layer widths; the
    encoders end in a tanh layer of ``embedding_dim`` and the decoder in a
    softmax layer of ``vocab_dim``.
    """

    vocab_dim: int
    embedding_dim: int
    f_hidden: tuple = (256,)
    g_hidden: tuple = (256,)
    h_hidden: tuple = (256,)
    attention_floor: float = 0.05

    def __post_init__(self):
        object.__setattr__(self, "f_hidden", tuple(self.f_hidden))
        object.__setattr__(self, "g_hidden", tuple(self.g_hidden))
        object.__setattr__(self, "h_hidden", tuple(self.h_hidden))
        if self.vocab_dim < 1 or self.embedding_dim < 1:
            raise ValueError("vocab_dim and embedding_dim must be >= 1")
        for widths in (self.f_hidden, self.g_hidden, self.h_hidden):
            if any(w < 1 for w in widths):
                raise ValueError("hidden widths must be >= 1")
        if not 0.0 < self.attention_floor < 0.5:
            raise ValueError("attention_floor must lie in (0, 0.5)")

    def f_dims(self):
        return (self.vocab_dim, *self.f_hidden, self.embedding_dim)

    def g_dims(self):
        return (self.vocab_dim, *self.g_hidden, self.embedding_dim)

    def h_dims(self):
        return (self.embedding_dim, *self.h_hidden, self.vocab_dim)


def named_arrays(stacks):
    """(name, array) pairs for a list of (stack_name, layers), fixed order."""
    out = []
    for stack_name, layers in stacks:
        for i, layer in enumerate(layers):
            out.append((f"{stack_name}{i}.weight", layer.weight))
            out.append((f"{stack_name}{i}.bias", layer.bias))
    return out


@dataclass
class EvModelParams:
    """Weights of the paragraph encoder, background encoder, and decoder."""

    f_layers: list
    g_layers: list
    h_layers: list
    architecture: EvArchitecture

    def stacks(self):
        return [("f", self.f_layers), ("g", self.g_layers),
                ("h", self.h_layers)]

    def arrays(self):
        """Parameter arrays in a fixed order, paired with names."""
        return named_arrays(self.stacks())

    def n_parameters(self):
        return sum(a.size for _, a in self.arrays())

    def copy(self):
        return copy.deepcopy(self)


def init_ev_params(arch, seed):
    """Glorot-uniform weights, zero biases, from one seeded generator."""
    rng = np.random.default_rng(seed)
    return _init_ev_params_from_rng(arch, rng)


def _init_ev_params_from_rng(arch, rng):
    return EvModelParams(
        f_layers=init_layers(arch.f_dims(), "tanh", rng),
        g_layers=init_layers(arch.g_dims(), "tanh", rng),
        h_layers=init_layers(arch.h_dims(), "softmax", rng),
        architecture=arch)


@dataclass
class EvGradients:
    """Gradient buffers mirroring :class:`EvModelParams`."""

    f: list
    g: list
    h: list

    @classmethod
    def zeros(cls, params):
        return cls(f=zeros_grads(params.f_layers),
                   g=zeros_grads(params.g_layers),
                   h=zeros_grads(params.h_layers))

    def stacks(self):
        return [("f", self.f), ("g", self.g), ("h", self.h)]

    def arrays(self):
        out = []
        for _, grads in self.stacks():
            for gW, gb in grads:
                out.append(gW)
                out.append(gb)
        return out

    def zero_(self):
        for a in self.arrays():
            a.fill(0.0)

    def scale_(self, factor):
        for a in self.arrays():
            a *= factor


@dataclass
class ForwardTrace:
    """Everything the backward pass needs from one forward evaluation."""

    v_paragraph: np.ndarray
    v_background: np.ndarray
    alpha: float
    raw_alpha: float
    cos: float
    alpha_gate: float  # 1.0 when the clamp is inactive, else 0.0
    mixed_code: np.ndarray
    p_reconstructed: np.ndarray
    p_bg_reconstructed: np.ndarray
    f_cache: object = field(repr=False, default=None)
    g_cache: object = field(repr=False, default=None)
    h_cache: object = field(repr=False, default=None)
    h_bg_cache: object = field(repr=False, default=None)


@dataclass
class BackgroundForward:
    """Background-side activations, shared by every example in a batch."""

    v_background: np.ndarray
    g_cache: object
    p_bg_reconstructed: np.ndarray
    h_bg_cache: object


def attention(v_paragraph, v_background, floor):
    """Mixing weight on the paragraph code: (1 - cos) / 2, clamped.

    Identical codes carry no paragraph-specific signal (weight at the
    floor); antipodal codes max out at 1 - floor.  A zero-norm embedding is
    treated as the floor and logged rather than raised.
    """
    alpha, _raw, _cos, _gate = _attention_full(v_paragraph, v_background,
                                               floor)
    return alpha


def _attention_full(v_paragraph, v_background, floor):
    nu = float(np.linalg.norm(v_paragraph))
    nw = float(np.linalg.norm(v_background))
    if nu == 0.0 or nw == 0.0:
        log.warning("zero-norm embedding in attention; clamping to floor")
        return floor, 0.0, 0.0, 0.0
    cos = float(np.dot(v_paragraph, v_background) / (nu * nw))
    cos = min(1.0, max(-1.0, cos))
    raw = 0.5 * (1.0 - cos)
    if raw < floor:
        return floor, raw, cos, 0.0
    if raw > 1.0 - floor:
        return 1.0 - floor, raw, cos, 0.0
    return raw, raw, cos, 1.0


def encode_paragraph(params, p):
    """Embed one paragraph distribution through the paragraph encoder."""
    if p.dim != params.architecture.vocab_dim:
        raise ValueError(f"input dim {p.dim} != vocab_dim "
                         f"{params.architecture.vocab_dim}")
    v, _ = stack_forward(params.f_layers, p)
    return v


def encode_background(params, p_bg):
    """Embed the background distribution through the background encoder."""
    if p_bg.dim != params.architecture.vocab_dim:
        raise ValueError(f"input dim {p_bg.dim} != vocab_dim "
                         f"{params.architecture.vocab_dim}")
    v, _ = stack_forward(params.g_layers, p_bg)
    return v


def encode_many(params, bows):
    """Stack of paragraph embeddings, one row per input distribution."""
    return np.stack([encode_paragraph(params, p) for p in bows])


def background_forward(params, p_bg):
    """Background code plus its reconstruction (no attention mixing)."""
    v_bg, g_cache = stack_forward(params.g_layers, p_bg)
    q_bg, h_bg_cache = stack_forward(params.h_layers, v_bg)
    return BackgroundForward(v_background=v_bg, g_cache=g_cache,
                             p_bg_reconstructed=q_bg, h_bg_cache=h_bg_cache)


def paragraph_forward(params, p, bg):
    """Paragraph-side forward given precomputed background activations."""
    arch = params.architecture
    v_p, f_cache = stack_forward(params.f_layers, p)
    alpha, raw, cos, gate = _attention_full(v_p, bg.v_background,
                                            arch.attention_floor)
    mixed = alpha * v_p + (1.0 - alpha) * bg.v_background
    q1, h_cache = stack_forward(params.h_layers, mixed)
    return ForwardTrace(
        v_paragraph=v_p, v_background=bg.v_background, alpha=alpha,
        raw_alpha=raw, cos=cos, alpha_gate=gate, mixed_code=mixed,
        p_reconstructed=q1, p_bg_reconstructed=bg.p_bg_reconstructed,
        f_cache=f_cache, g_cache=bg.g_cache, h_cache=h_cache,
        h_bg_cache=bg.h_bg_cache)


def forward(params, p, p_bg):
    """Full forward pass for one paragraph against the background."""
    if p.dim != params.architecture.vocab_dim:
        raise ValueError("paragraph distribution has the wrong dimension")
    if p_bg.dim != params.architecture.vocab_dim:
        raise ValueError("background distribution has the wrong dimension")
    return paragraph_forward(params, p, background_forward(params, p_bg))


def ev_loss(trace, p, p_bg, background_weight=1.0):
    """KL(p || reconstruction) + KL(background || its reconstruction)."""
    loss = kl_divergence(p, trace.p_reconstructed)
    if background_weight != 0.0:
        loss += background_weight * kl_divergence(p_bg,
                                                  trace.p_bg_reconstructed)
    return loss


def _softmax_kl_delta(q, p):
    """Gradient of KL(p || softmax(z)) w.r.t. the logits z."""
    out = np.empty_like(q)
    backend.kernels.softmax_kl_delta(q, p.indices, p.weights, out)
    return out


def _mix_backward(trace, delta_mix):
    """Gradients at the two embeddings from the mixed code.

    Differentiates both the convex combination and the attention weight
    itself (the clamp gates the attention path).  Returns
    (grad_v_paragraph, grad_v_background).
    """
    u = trace.v_paragraph
    w = trace.v_background
    alpha = trace.alpha
    grad_vp = alpha * delta_mix
    grad_vbg = (1.0 - alpha) * delta_mix
    if trace.alpha_gate != 0.0:
        dl_dalpha = float(np.dot(delta_mix, u - w))
        nu = float(np.linalg.norm(u))
        nw = float(np.linalg.norm(w))
        cos = trace.cos
        dcos_du = w / (nu * nw) - (cos / (nu * nu)) * u
        dcos_dw = u / (nu * nw) - (cos / (nw * nw)) * w
        # alpha = (1 - cos) / 2 inside the clamp
        grad_vp += dl_dalpha * (-0.5) * dcos_du
        grad_vbg += dl_dalpha * (-0.5) * dcos_dw
    return grad_vp, grad_vbg


def ev_backward(params, trace, p, p_bg, background_weight=1.0):
    """Analytic gradients of :func:`ev_loss` for every parameter."""
    grads = EvGradients.zeros(params)
    grad_vbg = _paragraph_backward(params, trace, p, grads)
    grad_vbg += _background_backward(params, trace, p_bg, grads,
                                     background_weight)
    stack_backward(params.g_layers, trace.g_cache, grad_vbg, grads.g,
                   top_is_logit_grad=False)
    _check_finite(grads)
    return grads


def _paragraph_backward(params, trace, p, grads):
    """Paragraph-reconstruction path; returns the background-code gradient
    contributed through the mix and the attention."""
    delta1 = _softmax_kl_delta(trace.p_reconstructed, p)
    delta_mix = stack_backward(params.h_layers, trace.h_cache, delta1,
                               grads.h, top_is_logit_grad=True,
                               need_input_grad=True)
    grad_vp, grad_vbg = _mix_backward(trace, delta_mix)
    stack_backward(params.f_layers, trace.f_cache, grad_vp, grads.f,
                   top_is_logit_grad=False)
    return grad_vbg


def _background_backward(params, trace, p_bg, grads, background_weight):
    """Background-reconstruction path; returns its background-code
    gradient (zero when the term is disabled)."""
    if background_weight == 0.0:
        return np.zeros_like(trace.v_background)
    delta2 = _softmax_kl_delta(trace.p_bg_reconstructed, p_bg)
    if background_weight != 1.0:
        delta2 *= background_weight
    return stack_backward(params.h_layers, trace.h_bg_cache, delta2,
                          grads.h, top_is_logit_grad=True,
                          need_input_grad=True)


def _check_finite(grads):
    for _, stack in grads.stacks():
        for gW, gb in stack:
            if not (np.isfinite(gW).all() and np.isfinite(gb).all()):
                raise FloatingPointError("non-finite gradient")


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------

@dataclass
class TrainingConfig:
    """Minibatch Adam settings; the seed is mandatory."""

    epochs: int
    seed: int
    batch_size: int = 32
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    shuffle: bool = True
    background_weight: float = 1.0

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.seed is None:
            raise ValueError("a seed is required for reproducible training")
        if self.background_weight < 0.0:
            raise ValueError("background_weight must be >= 0")


@dataclass
class EpochStats:
    """Per-epoch mean loss and its KL components."""

    epoch: int
    mean_loss: float
    paragraph_kl: float
    background_kl: float
    clean_kl: float = None


class TrainingDiverged(RuntimeError):
    """Non-finite loss or gradient; carries the last good checkpoint."""

    def __init__(self, message, params, history):
        super().__init__(message)
        self.params = params
        self.history = history


def _adam_state(params, config):
    return AdamState.init([a for _, a in params.arrays()],
                          learning_rate=config.learning_rate,
                          beta1=config.beta1, beta2=config.beta2,
                          epsilon=config.epsilon)


def _ev_batch_step(params, batch, p_bg, grads, config):
    """Gradient of the batch-mean loss; returns per-example losses.

    The background activations depend only on the current parameters, so
    they are computed once and shared by the whole batch.
    """
    bw = config.background_weight
    bg = background_forward(params, p_bg)
    bg_kl = kl_divergence(p_bg, bg.p_bg_reconstructed) if bw != 0.0 else 0.0
    grads.zero_()
    vbg_delta = np.zeros_like(bg.v_background)
    para_kls = []
    for p in batch:
        trace = paragraph_forward(params, p, bg)
        para_kls.append(kl_divergence(p, trace.p_reconstructed))
        vbg_delta += _paragraph_backward(params, trace, p, grads)
    inv = 1.0 / len(batch)
    grads.scale_(inv)
    vbg_delta *= inv
    if bw != 0.0:
        delta2 = _softmax_kl_delta(bg.p_bg_reconstructed, p_bg)
        if bw != 1.0:
            delta2 *= bw
        vbg_delta += stack_backward(params.h_layers, bg.h_bg_cache, delta2,
                                    grads.h, top_is_logit_grad=True,
                                    need_input_grad=True)
    stack_backward(params.g_layers, bg.g_cache, vbg_delta, grads.g,
                   top_is_logit_grad=False)
    return para_kls, bg_kl


def train_ev(corpus, p_bg, arch, config, init_params=None):
    """Minibatch Adam on the reconstruction objective.

    Deterministic for a given seed: two runs produce bit-identical
    parameters.  Raises :class:`TrainingDiverged` (carrying the last
    finished epoch's parameters) if the loss goes non-finite.
    """
    if not corpus:
        raise ValueError("training corpus is empty")
    rng = np.random.default_rng(config.seed)
    if init_params is None:
        params = _init_ev_params_from_rng(arch, rng)
    else:
        params = init_params.copy()
    names = [n for n, _ in params.arrays()]
    state = _adam_state(params, config)
    grads = EvGradients.zeros(params)
    history = []
    checkpoint = params.copy()
    n = len(corpus)
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(n) if config.shuffle else np.arange(n)
        sum_para = 0.0
        sum_bg = 0.0
        try:
            for start in range(0, n, config.batch_size):
                batch = [corpus[i] for i in order[start:start +
                                                  config.batch_size]]
                para_kls, bg_kl = _ev_batch_step(params, batch, p_bg, grads,
                                                 config)
                sum_para += sum(para_kls)
                sum_bg += bg_kl * len(batch)
                adam_step([a for _, a in params.arrays()], grads.arrays(),
                          state, names=names)
        except FloatingPointError as exc:
            raise TrainingDiverged(
                f"epoch {epoch}: {exc}", checkpoint, history) from exc
        mean_para = sum_para / n
        mean_bg = sum_bg / n
        mean_loss = mean_para + config.background_weight * mean_bg
        if not np.isfinite(mean_loss):
            raise TrainingDiverged(f"epoch {epoch}: loss is {mean_loss}",
                                   checkpoint, history)
        history.append(EpochStats(epoch=epoch, mean_loss=mean_loss,
                                  paragraph_kl=mean_para,
                                  background_kl=mean_bg))
        checkpoint = params.copy()
        log.info("epoch %d: loss %.6f (paragraph %.6f, background %.6f)",
                 epoch, mean_loss, mean_para, mean_bg)
    return params, history


# ---------------------------------------------------------------------------
# Flattening (gradient checks, serialization helpers)
# ---------------------------------------------------------------------------

def flatten_arrays(arrays):
    return np.concatenate([a.reshape(-1) for a in arrays]) if arrays \
        else np.zeros(0)


def flatten_params(params):
    return flatten_arrays([a for _, a in params.arrays()])


def set_params_flat(params, theta):
    """Write a flat vector back into the parameter arrays, in place."""
    offset = 0
    for _, a in params.arrays():
        a[...] = theta[offset:offset + a.size].reshape(a.shape)
        offset += a.size
    if offset != theta.size:
        raise ValueError(f"flat vector has {theta.size} entries, "
                         f"model needs {offset}")


def parameter_names(params):
    """One name per scalar, matching the flattened order."""
    names = []
    for name, a in params.arrays():
        names.extend(f"{name}[{i}]" for i in range(a.size))
    return names
