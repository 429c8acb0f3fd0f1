"""Pure numpy implementations of the compiled kernels.

Same signatures and semantics as ``_ckernels``; used when the extension
is not built.
"""

import numpy as np


def gl_history_sum(weights, dev, k, memory):
    m = k if (memory <= 0 or memory > k) else memory
    if m == 0:
        return np.zeros(dev.shape[1])
    # rows dev[k-1], dev[k-2], ..., dev[k-m] pair with weights[1..m]
    return weights[1:m + 1] @ dev[k - 1::-1][:m]


def complex_logdet(M):
    sign, logabs = np.linalg.slogdet(np.asarray(M, dtype=np.complex128))
    if sign == 0:
        return 0j, float("-inf")
    return complex(sign), float(logabs)


def pencil_logdet(M0, M1, M2, omegas):
    omegas = np.asarray(omegas, dtype=float)
    M0 = np.asarray(M0, dtype=np.complex128)
    M1 = np.asarray(M1, dtype=np.complex128)
    M2 = np.asarray(M2, dtype=np.complex128)
    stack = (M0[None] + omegas[:, None, None] * M1[None]
             + (omegas ** 2)[:, None, None] * M2[None])
    sign, logabs = np.linalg.slogdet(stack)
    return sign.astype(np.complex128), logabs.astype(float)
