"""Backend selection for the hot kernels.

The compiled extension ``optolie._core`` is used when it imports; set
``OPTOLIE_PURE_PYTHON=1`` to force the pure-Python fallback.
"""
import os

from . import _pykernels

if os.environ.get("OPTOLIE_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
else:
    try:
        from . import _core as _impl
    except ImportError:
        _impl = _pykernels

BACKEND = "python" if _impl is _pykernels else "compiled"

integrate_wn = _impl.integrate_wn
wigner_kernel = _impl.wigner_kernel
drive_alpha1 = _pykernels.drive_alpha1
