"""Hot loops of the Monte Carlo engine.

Each kernel has a numba ``@njit`` implementation and a pure-numpy twin with the same
signature. The numba path is used unless the environment variable
``RCI_SECRECY_NO_NUMBA`` is set to a non-empty value other than ``0`` at import time, or
numba is not importable.
"""

import math
import os

import numpy as np

__all__ = ["BACKEND", "sinr_from_gain", "secrecy_sum_spectral"]


def _sinr_from_gain_np(G, rho):
    p = np.abs(G) ** 2
    diag = np.diagonal(p).copy()
    interf = p.sum(axis=1) - diag
    leak = p.sum(axis=0) - diag
    # row/column sums minus the diagonal can round slightly below zero
    np.maximum(interf, 0.0, out=interf)
    np.maximum(leak, 0.0, out=leak)
    return rho * diag / (1.0 + rho * interf), rho * leak


def _secrecy_sum_spectral_np(L, U, s, xis, M, rho):
    Uh = U.conj().T
    s2 = s * s
    out = np.empty(len(xis))
    cond = np.empty(len(xis))
    for i, xi in enumerate(xis):
        lam = s2 + M * xi
        alam = np.abs(lam)
        cond[i] = alam.max() / alam.min() if alam.min() > 0 else np.inf
        d = s / lam
        gamma = np.sum(s2 / (lam * lam))
        G = (L * (d / np.sqrt(gamma))) @ Uh
        su, se = _sinr_from_gain_np(G, rho)
        out[i] = np.maximum(np.log2(1.0 + su) - np.log2(1.0 + se), 0.0).sum()
    return out, cond


_sinr_from_gain_nb = None
_secrecy_sum_spectral_nb = None

try:
    from numba import njit
except ImportError:  # pragma: no cover
    njit = None

if njit is not None:

    @njit(cache=True)
    def _sinr_from_gain_nb(G, rho):
        K = G.shape[0]
        su = np.empty(K)
        se = np.empty(K)
        for k in range(K):
            interf = 0.0
            leak = 0.0
            for j in range(K):
                if j == k:
                    continue
                a = G[k, j]
                interf += a.real * a.real + a.imag * a.imag
                c = G[j, k]
                leak += c.real * c.real + c.imag * c.imag
            dk = G[k, k]
            su[k] = rho * (dk.real * dk.real + dk.imag * dk.imag) / (1.0 + rho * interf)
            se[k] = rho * leak
        return su, se

    @njit(cache=True)
    def _secrecy_sum_spectral_nb(L, U, s, xis, M, rho):
        K, r = L.shape
        n = xis.shape[0]
        out = np.empty(n)
        cond = np.empty(n)
        Uh = np.ascontiguousarray(U.conj().T)
        Lw = np.empty((K, r), dtype=np.complex128)
        for i in range(n):
            xi = xis[i]
            gamma = 0.0
            amax = 0.0
            amin = np.inf
            for l in range(r):
                lam = s[l] * s[l] + M * xi
                a = abs(lam)
                amax = max(amax, a)
                amin = min(amin, a)
                gamma += (s[l] * s[l]) / (lam * lam)
            cond[i] = amax / amin if amin > 0.0 else np.inf
            scale = 1.0 / math.sqrt(gamma)
            for l in range(r):
                w = scale * s[l] / (s[l] * s[l] + M * xi)
                for k in range(K):
                    Lw[k, l] = L[k, l] * w
            su, se = _sinr_from_gain_nb(np.dot(Lw, Uh), rho)
            tot = 0.0
            for k in range(K):
                v = math.log2(1.0 + su[k]) - math.log2(1.0 + se[k])
                if v > 0.0:
                    tot += v
            out[i] = tot
        return out, cond


def _select():
    flag = os.environ.get("RCI_SECRECY_NO_NUMBA", "")
    if njit is None or (flag and flag != "0"):
        return "numpy"
    return "numba"


BACKEND = _select()

if BACKEND == "numba":
    _sinr_impl = _sinr_from_gain_nb
    _spectral_impl = _secrecy_sum_spectral_nb
else:
    _sinr_impl = _sinr_from_gain_np
    _spectral_impl = _secrecy_sum_spectral_np


def sinr_from_gain(G, rho):
    """Intended-user and colluding-eavesdropper SINRs from the gain matrix ``G = H W``.

    ``G[k, j] = h_k^H w_j``. User k sees interference from row k; the alliance of all
    other users collects column k.
    """
    G = np.ascontiguousarray(G, dtype=np.complex128)
    return _sinr_impl(G, float(rho))


def secrecy_sum_spectral(L, U, s, xis, M, rho):
    """Secrecy sum-rate of RCI for many regularization values from one SVD.

    With the precoder built from ``Hhat = U diag(s) V^H`` and the true channel ``H``,
    pass ``L = H V``. Returns ``(rates, cond)`` where ``cond[i]`` is the condition number
    of the regularized Gram matrix at ``xis[i]``.
    """
    return _spectral_impl(
        np.ascontiguousarray(L, dtype=np.complex128),
        np.ascontiguousarray(U, dtype=np.complex128),
        np.ascontiguousarray(s, dtype=np.float64),
        np.ascontiguousarray(xis, dtype=np.float64),
        float(M),
        float(rho),
    )
