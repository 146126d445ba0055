"""Backend selection for the closed-loop step kernel.

The compiled extension is used when it was built; otherwise, or when the
environment variable ``FTDP_PURE_PYTHON`` is set to a non-empty value other
than ``0``, the pure-Python twin is loaded. Both expose the same
``LoopKernel`` class and produce the same log rows.
"""

import os

from ._kernel_py import COLUMNS, NCOLS
from ._kernel_py import LoopKernel as PyLoopKernel

_force_py = os.environ.get("FTDP_PURE_PYTHON", "") not in ("", "0")

CyLoopKernel = None
if not _force_py:
    try:
        from ._kernel import LoopKernel as CyLoopKernel
    except ImportError:  # extension not built
        CyLoopKernel = None

if CyLoopKernel is not None:
    LoopKernel = CyLoopKernel
    BACKEND = "cython"
else:
    LoopKernel = PyLoopKernel
    BACKEND = "python"

__all__ = ["BACKEND", "COLUMNS", "NCOLS", "LoopKernel", "PyLoopKernel", "CyLoopKernel"]
