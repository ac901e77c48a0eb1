"""Pick the compiled kernels when available, else the pure-Python ones.

Set ``MMISQ_BACKEND=python`` to force the fallback.
"""
import importlib
import os

from . import _kernels_py


def load(name=None):
    """Return ``(backend_name, kernel_module)`` for ``"cython"`` or ``"python"``."""
    if name is None:
        name = os.environ.get("MMISQ_BACKEND", "auto").lower()
    if name == "python":
        return "python", _kernels_py
    try:
        mod = importlib.import_module("mmisq._kernels")
    except ImportError:
        if name == "cython":
            raise
        return "python", _kernels_py
    return "cython", mod


BACKEND, kernels = load()
