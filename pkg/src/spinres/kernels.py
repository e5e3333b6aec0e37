"""Backend selection for the hot kernels.

The compiled extension is preferred; setting ``SPINRES_PURE_PYTHON=1`` or a
missing/failed build selects the NumPy fallback.  ``BACKEND`` names the one
in use.
"""

import os

from . import _kernels_py

if os.environ.get("SPINRES_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl
    except ImportError:
        _impl = _kernels_py

BACKEND = _impl.BACKEND
jacobi_eigh = _impl.jacobi_eigh
linewidth_model = _impl.linewidth_model
linewidth_jacobian = _impl.linewidth_jacobian


def available_backends():
    """Map backend name -> kernel module for every importable backend."""
    out = {"python": _kernels_py}
    try:
        from . import _kernels
    except ImportError:
        pass
    else:
        out["cython"] = _kernels
    return out
