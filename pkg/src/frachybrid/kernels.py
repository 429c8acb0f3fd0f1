"""Backend selection for the hot kernels.

The compiled extension is preferred; the numpy fallback is used when it
is unavailable.  ``set_backend`` switches explicitly (benchmarks, tests).
"""

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

_BACKENDS = {"python": _pykernels}
if _ckernels is not None:
    _BACKENDS["compiled"] = _ckernels

_active = _BACKENDS.get("compiled", _pykernels)


def available_backends():
    return sorted(_BACKENDS)


def backend_name():
    return "compiled" if _active is _ckernels and _ckernels is not None else "python"


def set_backend(name):
    global _active
    try:
        _active = _BACKENDS[name]
    except KeyError:
        raise ValueError(f"unknown backend {name!r}; available: {available_backends()}") from None


def gl_history_sum(weights, dev, k, memory):
    """Sum_{j=1}^{m} weights[j] * dev[k-j] with m = min(k, memory).

    ``memory <= 0`` means unbounded.  ``dev`` must be C-contiguous float64.
    """
    return _active.gl_history_sum(weights, dev, k, memory)


def complex_logdet(M):
    """(unit phase, log|det M|) by partially pivoted elimination."""
    return _active.complex_logdet(M)


def pencil_logdet(M0, M1, M2, omegas):
    """Vectorised ``complex_logdet`` of ``M0 + w M1 + w^2 M2`` over ``omegas``."""
    return _active.pencil_logdet(M0, M1, M2, omegas)
