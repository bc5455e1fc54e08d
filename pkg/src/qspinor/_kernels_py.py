"""Pure-Python reference versions of the compiled kernels in ``_kernels.pyx``.

Both modules expose the same four functions with the same argument order.
The compiled module is preferred at import time by :mod:`qspinor.kernels`.
"""

import numpy as np


def blade_sign(a, b, neg_mask):
    """Sign of the product of basis blades ``a`` and ``b`` (bitmasks).

    Counts the transpositions needed to sort the concatenated generator
    list, then one extra factor of -1 for every shared generator whose
    square is -1.
    """
    swaps = 0
    x = a >> 1
    while x:
        swaps += bin(x & b).count("1")
        x >>= 1
    swaps += bin(a & b & neg_mask).count("1")
    return -1 if swaps & 1 else 1


def gp_dense(a, b, neg_mask):
    out = np.zeros(len(a), dtype=np.complex128)
    nz_a = np.flatnonzero(a)
    nz_b = np.flatnonzero(b)
    for i in nz_a:
        ai = a[i]
        for j in nz_b:
            out[i ^ j] += blade_sign(int(i), int(j), neg_mask) * ai * b[j]
    return out


def neumann_sum(m, stop_norm, max_terms):
    """Sum ``I + M + M^2 + ...`` left to right.

    Every term is added; the loop stops after the first term whose max-norm
    falls below ``stop_norm``. Returns ``(sum, significant_terms, last_norm)``
    where the terminating negligible term is not counted.
    """
    m = np.asarray(m, dtype=np.complex128)
    n = m.shape[0]
    total = np.eye(n, dtype=np.complex128)
    term = np.eye(n, dtype=np.complex128)
    used = 1
    last = 1.0 if n else 0.0
    for _ in range(1, max_terms):
        term = term @ m
        total = total + term
        last = float(np.max(np.abs(term))) if n else 0.0
        if last < stop_norm:
            break
        if not np.isfinite(last):
            used += 1
            break
        used += 1
    return total, used, last


def jackson_sum(values, x0, q):
    """``(1 - q) * sum_k q^k x0 * values[k]`` over the rows of ``values``."""
    values = np.asarray(values, dtype=np.complex128)
    out = np.zeros(values.shape[1], dtype=np.complex128)
    weight = complex(x0)
    for k in range(values.shape[0]):
        out += weight * values[k]
        weight *= q
    return (1.0 - q) * out
