"""Numeric inner loops with a numba backend and a pure-numpy fallback.

The backend is chosen once at import time.  Set ``SEMITRACE_BACKEND=numpy``
to force the fallback; the default uses numba when it imports cleanly.
"""

from __future__ import annotations

import os

import numpy as np

_REQUESTED = os.environ.get("SEMITRACE_BACKEND", "numba").strip().lower()

try:
    if _REQUESTED == "numpy":
        raise ImportError("numpy backend requested")
    from numba import njit
    BACKEND = "numba"
except ImportError:
    njit = None
    BACKEND = "numpy"


def smooth_matrix_contract_numpy(C, W, PB, PG, B, G, n, off):
    """out[g, b] = sum_k W_k C_k[G_g - B_b + off] PB[b, k] PG[g, k]."""
    nb, ng = PB.shape[0], PG.shape[0]
    out = np.empty((ng, nb), dtype=complex)
    for b in range(nb):
        d = G - B[b] + off
        if n == 1:
            Cb = C[:, d[:, 0]]
        else:
            Cb = C[:, d[:, 0], d[:, 1]]
        out[:, b] = np.einsum("k,kg,gk->g", W * PB[b], Cb, PG)
    return out


def _contract_loop(CT, W, PB, PG, B, G, n, off):
    # CT is C with the node axis last, so the innermost loop reads contiguously
    nb, ng, nk = PB.shape[0], PG.shape[0], PB.shape[1]
    out = np.empty((ng, nb), dtype=np.complex128)
    for b in range(nb):
        WB = W * PB[b]
        for g in range(ng):
            d0 = G[g, 0] - B[b, 0] + off
            d1 = G[g, 1] - B[b, 1] + off if n == 2 else 0
            acc = 0.0 + 0.0j
            for k in range(nk):
                acc += WB[k] * PG[g, k] * CT[d0, d1, k]
            out[g, b] = acc
    return out


def node_axis_last(C, n):
    C3 = C if n == 2 else C[:, :, None]
    return np.ascontiguousarray(np.moveaxis(C3, 0, -1))


if BACKEND == "numba":
    _contract_jit = njit(cache=True)(_contract_loop)

    def smooth_matrix_contract(C, W, PB, PG, B, G, n, off):
        return _contract_jit(node_axis_last(C, n), W, np.ascontiguousarray(PB),
                             np.ascontiguousarray(PG), B, G, n, off)
else:
    smooth_matrix_contract = smooth_matrix_contract_numpy
