"""Kernel backend selection.

The compiled ``_ckernels`` extension is used when it imports; otherwise (or
when the environment variable ``PAPDYN_PURE=1`` is set) the pure-Python
twin in ``_kernels_py`` is used. ``BACKEND`` names the active one.
"""
import os

from . import _kernels_py as pure

compiled = None
if os.environ.get("PAPDYN_PURE", "") != "1":
    try:
        from . import _ckernels as compiled
    except ImportError:  # extension not built
        compiled = None

_impl = compiled if compiled is not None else pure
BACKEND = "compiled" if compiled is not None else "python"

rk4_dde = _impl.rk4_dde
expo_recursion = _impl.expo_recursion
