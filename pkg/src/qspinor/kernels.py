"""Kernel backend selection.

The compiled extension is used when it was built and importable; set
``QSPINOR_PURE_PYTHON=1`` to force the reference implementation.
"""

import os

BACKEND = "python"

if not os.environ.get("QSPINOR_PURE_PYTHON"):
    try:
        from qspinor._kernels import blade_sign, gp_dense, jackson_sum, neumann_sum

        BACKEND = "cython"
    except ImportError:
        pass

if BACKEND == "python":
    from qspinor._kernels_py import blade_sign, gp_dense, jackson_sum, neumann_sum

__all__ = ["BACKEND", "blade_sign", "gp_dense", "jackson_sum", "neumann_sum"]
