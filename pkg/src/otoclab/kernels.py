"""Backend selection for the hot loops.

The compiled extension is used when it imports; otherwise the numpy fallback.
Set ``OTOCLAB_PURE_PYTHON=1`` to force the fallback.  ``OTOCLAB_THREADS``
caps the OpenMP thread count of the compiled kernels (default 1).
"""

import os

from . import _fallback

try:
    if os.environ.get("OTOCLAB_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("pure-python backend requested")
    from . import _kernels as _impl

    BACKEND = "cython"
except ImportError:
    _impl = _fallback
    BACKEND = "python"


def default_threads():
    try:
        return max(int(os.environ.get("OTOCLAB_THREADS", "1")), 1)
    except ValueError:
        return 1


def harmonic_force(theta, K, with_derivative=True, num_threads=None, backend=None):
    """Evaluate ``sum_n n K_n sin(n theta)`` (and ``sum_n n^2 K_n cos(n theta)``).

    ``K[0]`` is the n=1 harmonic.  Returns ``(F, dF/dtheta)`` or just ``F``.
    """
    impl = _select(backend)
    if num_threads is None:
        num_threads = default_threads()
    return impl.harmonic_force(theta, K, with_derivative, num_threads)


def cosine_moments(theta, n_max, num_threads=None, backend=None):
    """``sum_i cos(n theta_i)`` for n = 1..n_max."""
    impl = _select(backend)
    if num_threads is None:
        num_threads = default_threads()
    return impl.cosine_moments(theta, int(n_max), num_threads)


def nonlinear_kick(f, coeff, backend=None):
    """Multiply grid values by ``exp(-i coeff |f|^2)``."""
    return _select(backend).nonlinear_kick(f, float(coeff))


def _select(backend):
    if backend is None:
        return _impl
    if backend == "python":
        return _fallback
    if backend == "cython":
        if _impl is _fallback:
            raise RuntimeError("compiled kernels are not available")
        return _impl
    raise ValueError(f"unknown backend {backend!r}")
