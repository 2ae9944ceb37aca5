"""Hot numeric kernels with a switchable backend.

Set ``SEEDCODEC_BACKEND=numpy`` to force the pure-numpy path; the default is
``numba`` when it imports, otherwise numpy. The choice is made once at import.
Bit-exact reproducibility (suffix determinism, byte-identical reports) holds
within one backend, not across the two.
"""
import os

from . import numpy_kernels

_requested = os.environ.get("SEEDCODEC_BACKEND", "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    raise ImportError(f"SEEDCODEC_BACKEND must be 'numba' or 'numpy', got {_requested!r}")

BACKEND = "numpy"
if _requested == "numba":
    try:
        from . import numba_kernels as _impl
        BACKEND = "numba"
    except ImportError:  # pragma: no cover - numba is a declared dependency
        _impl = numpy_kernels
else:
    _impl = numpy_kernels

separable_blur = _impl.separable_blur
filter_valid = _impl.filter_valid
empirical_posterior_mean = _impl.empirical_posterior_mean

__all__ = ["BACKEND", "separable_blur", "filter_valid", "empirical_posterior_mean"]
