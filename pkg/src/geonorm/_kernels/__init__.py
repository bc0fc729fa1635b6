"""Kernel backend selection.

The compiled Cython backend is used when importable; otherwise (or when the
``GEONORM_PURE_PYTHON`` environment variable is set to a non-empty value)
the NumPy reference backend takes over.  Both expose the same functions and
are compared by the parity tests and the kernel benchmark.
"""

import os

from . import _ref

if os.environ.get("GEONORM_PURE_PYTHON"):
    _impl = _ref
else:
    try:
        from . import _core as _impl
    except ImportError:
        _impl = _ref

BACKEND = _impl.BACKEND
warp_bilinear = _impl.warp_bilinear
central_moment_sums = _impl.central_moment_sums
