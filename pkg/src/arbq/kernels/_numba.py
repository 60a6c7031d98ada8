"""numba-compiled kernels; same contracts as :mod:`arbq.kernels._numpy`."""

import numpy as np
from numba import njit


@njit(cache=True)
def energy_table(lin, J, offset):
    # doubling: states with top bit k are the lower half plus x_k's gain,
    # and that gain (lin[k] + couplings to lower bits) doubles the same way
    q = lin.shape[0]
    N = 1 << q
    E = np.empty(N)
    gain = np.empty(max(N >> 1, 1))
    E[0] = offset
    for k in range(q):
        half = 1 << k
        gain[0] = lin[k]
        for j in range(k):
            w = J[j, k]
            m = 1 << j
            for i in range(m):
                gain[m + i] = gain[i] + w
        for i in range(half):
            E[half + i] = E[i] + gain[i]
    return E


@njit(cache=True)
def anneal(lin, J, temps, x0, thresholds):
    m, q = x0.shape
    out = np.empty((m, q), np.int8)
    field = np.empty(q)
    for s in range(m):
        x = x0[s].astype(np.int8)
        for v in range(q):
            field[v] = lin[v]
        for u in range(q):
            xu = x[u]
            for v in range(q):
                field[v] += J[v, u] * xu
        for t in range(temps.shape[0]):
            T = temps[t]
            for v in range(q):
                d = (1 - 2 * x[v]) * field[v]
                if d <= 0.0 or d < T * thresholds[s, t, v]:
                    delta = 1.0 - 2.0 * x[v]
                    x[v] ^= 1
                    for u in range(q):
                        field[u] += J[u, v] * delta
        out[s] = x
    return out


@njit(cache=True)
def apply_phase(psi, diag, gamma):
    for k in range(psi.shape[0]):
        psi[k] *= np.exp(-1j * gamma * diag[k])
    return psi


@njit(cache=True)
def apply_mixer(psi, beta):
    N = psi.shape[0]
    c = np.cos(beta)
    s = -1j * np.sin(beta)
    stride = 1
    while stride < N:
        for base in range(0, N, 2 * stride):
            for k in range(base, base + stride):
                a = psi[k]
                b = psi[k + stride]
                psi[k] = c * a + s * b
                psi[k + stride] = s * a + c * b
        stride <<= 1
    return psi
