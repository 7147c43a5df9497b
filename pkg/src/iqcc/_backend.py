"""Select the compiled kernels when available, else the numpy fallback.

Set ``IQCC_BACKEND=python`` to force the fallback.
"""
import os

if os.environ.get("IQCC_BACKEND", "").lower() == "python":
    from . import _kernels_py as kernels
else:
    try:
        from . import _kernels as kernels
    except ImportError:  # extension not built
        from . import _kernels_py as kernels

BACKEND = kernels.NAME

__all__ = ["kernels", "BACKEND"]
