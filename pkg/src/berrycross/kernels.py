"""Backend selection for the step-propagation kernel.

The compiled Cython kernel is used when it has been built; otherwise the
pure-Python implementation is used. Setting ``BERRYCROSS_PURE_PYTHON=1``
forces the fallback.
"""
import os

from . import _kernel_py

python_propagate = _kernel_py.propagate

try:
    if os.environ.get("BERRYCROSS_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("pure-Python kernel forced by environment")
    from ._kernel import propagate as compiled_propagate
except ImportError:
    compiled_propagate = None

if compiled_propagate is not None:
    propagate = compiled_propagate
    BACKEND = "cython"
else:
    propagate = python_propagate
    BACKEND = "python"
