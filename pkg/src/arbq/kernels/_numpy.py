"""Pure-numpy kernels. Slower, but with no compilation step and no numba dependency."""

import numpy as np


def _linear_table(w, lo=0.0, hi=1.0):
    """Values of sum_k w_k * a(bit_k) over all 2^len(w) indices, a(0)=lo, a(1)=hi."""
    out = np.zeros(1)
    for wk in w:
        out = np.concatenate((out + wk * lo, out + wk * hi))
    return out


def energy_table(lin, J, offset):
    q = lin.shape[0]
    E = np.full(1, float(offset))
    for k in range(q):
        # adding variable k: the new upper half has x_k = 1
        gain = lin[k] + _linear_table(J[:k, k])
        E = np.concatenate((E, E + gain))
    return E


def anneal(lin, J, temps, x0, thresholds):
    """Run Metropolis sweeps on a block of shots, vectorised across shots.

    ``thresholds[s, t, v]`` is an Exp(1) variate; a move with energy change
    ``d > 0`` is accepted when ``d < T * threshold``, which is the Metropolis
    rule with ``exp(-threshold)`` as the uniform draw.
    """
    m, q = x0.shape
    x = x0.astype(np.int8).copy()
    field = np.repeat(lin[None, :], m, axis=0)
    for u in range(q):
        field += J[None, :, u] * x[:, u:u + 1]
    rows = np.arange(m)
    for t in range(temps.shape[0]):
        T = temps[t]
        for v in range(q):
            d = (1 - 2 * x[:, v]) * field[:, v]
            acc = (d <= 0.0) | (d < T * thresholds[:, t, v])
            if not acc.any():
                continue
            sel = rows[acc]
            delta = (1 - 2 * x[sel, v]).astype(np.float64)
            x[sel, v] ^= 1
            field[sel] += J[None, :, v] * delta[:, None]
    return x


def apply_phase(psi, diag, gamma):
    psi *= np.exp(-1j * gamma * diag)
    return psi


def apply_mixer(psi, beta):
    q = psi.shape[0].bit_length() - 1
    c = np.cos(beta)
    s = -1j * np.sin(beta)
    for v in range(q):
        view = psi.reshape(-1, 2, 1 << v)
        a = view[:, 0, :].copy()
        b = view[:, 1, :]
        view[:, 0, :] = c * a + s * b
        view[:, 1, :] = s * a + c * b
    return psi
