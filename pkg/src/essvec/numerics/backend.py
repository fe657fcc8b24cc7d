"""Kernel backend selection.

Two interchangeable kernel implementations exist: the compiled Cython
extension ``_ckernels`` and the numpy fallback ``_pykernels``.  The compiled
one is preferred when importable; set ``ESSVEC_BACKEND=python`` (or
``compiled``) to force a choice.  ``kernels`` is the active module; code in
this package calls ``backend.kernels.<fn>`` so a swap takes effect
immediately.
"""

import contextlib
import logging
import os

from . import _pykernels

log = logging.getLogger(__name__)

_BACKENDS = {"python": _pykernels}

try:
    from . import _ckernels

    _BACKENDS["compiled"] = _ckernels
except ImportError:
    _ckernels = None


def available_backends():
    """Names of the importable kernel backends."""
    return tuple(sorted(_BACKENDS))


def _initial():
    forced = os.environ.get("ESSVEC_BACKEND", "").strip().lower()
    if forced:
        if forced not in _BACKENDS:
            if forced == "compiled":
                log.warning("ESSVEC_BACKEND=compiled but the extension is "
                            "not built; using the python backend")
                return _pykernels
            raise ValueError(
                f"ESSVEC_BACKEND={forced!r}: expected one of "
                f"{sorted(_BACKENDS)}")
        return _BACKENDS[forced]
    return _BACKENDS.get("compiled", _pykernels)


kernels = _initial()


def active_backend():
    """Name of the kernel backend currently in use."""
    return kernels.NAME


def set_backend(name):
    """Switch the active kernel backend; returns the previous name."""
    global kernels
    if name not in _BACKENDS:
        raise ValueError(f"unknown backend {name!r}; available: "
                         f"{sorted(_BACKENDS)}")
    previous = kernels.NAME
    kernels = _BACKENDS[name]
    return previous


@contextlib.contextmanager
def use_backend(name):
    """Temporarily switch backends (used by tests and benchmarks)."""
    previous = set_backend(name)
    try:
        yield _BACKENDS[name]
    finally:
        set_backend(previous)
