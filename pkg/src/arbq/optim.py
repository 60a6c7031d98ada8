"""Derivative-free minimisation by linear interpolation over a simplex in a trust region.

The method keeps ``n + 1`` interpolation points, fits the linear model that
passes through them, and steps a distance ``rho`` along its steepest-descent
direction.  ``rho`` only ever shrinks (halving on failed steps) until it
falls below ``rho_end``.  This is the unconstrained core of Powell's COBYLA.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = ["TraceRow", "MinimizeResult", "minimize_linear_tr"]


@dataclass
class TraceRow:
    iteration: int
    objective: float
    running_best: float
    params: np.ndarray


@dataclass
class MinimizeResult:
    x: np.ndarray
    fun: float
    nfev: int
    converged: bool
    message: str
    trace: list[TraceRow] = field(default_factory=list)


def minimize_linear_tr(
    fun: Callable[[np.ndarray], float],
    x0,
    rho_begin: float = 0.5,
    rho_end: float = 1e-4,
    maxfev: int = 100,
) -> MinimizeResult:
    x0 = np.asarray(x0, dtype=np.float64).copy()
    n = x0.size
    if maxfev < 1:
        raise ValueError("maxfev must be >= 1")
    trace: list[TraceRow] = []
    best = [np.inf, x0.copy()]

    def f(x):
        val = float(fun(x))
        if val < best[0]:
            best[0] = val
            best[1] = x.copy()
        trace.append(TraceRow(len(trace) + 1, val, best[0], x.copy()))
        return val

    def done(converged, message):
        return MinimizeResult(best[1], best[0], len(trace), converged, message, trace)

    rho = rho_begin
    sim = np.vstack([x0, x0 + rho * np.eye(n)])
    fv = np.empty(n + 1)
    for k in range(n + 1):
        if len(trace) >= maxfev:
            return done(False, "evaluation budget exhausted")
        fv[k] = f(sim[k])

    while True:
        if len(trace) >= maxfev:
            return done(False, "evaluation budget exhausted")
        b = int(np.argmin(fv))
        if b != 0:
            sim[[0, b]] = sim[[b, 0]]
            fv[[0, b]] = fv[[b, 0]]
        D = sim[1:] - sim[0]
        df = fv[1:] - fv[0]
        try:
            g = np.linalg.solve(D, df)
        except np.linalg.LinAlgError:
            g = np.linalg.lstsq(D, df, rcond=None)[0]
        gnorm = float(np.linalg.norm(g))

        if gnorm <= 1e-14 * (1.0 + abs(fv[0])):
            # flat model: nothing to follow at this radius
            rho *= 0.5
            if rho < rho_end:
                return done(True, "model gradient vanished")
            continue

        xt = sim[0] - rho * g / gnorm
        ft = f(xt)
        if ft < fv[0]:
            worst = int(np.argmax(fv))
            sim[worst] = xt
            fv[worst] = ft
            continue
        # failed step: keep the trial if it beats the worst vertex, then
        # either repair a stretched simplex or shrink the radius
        worst = int(np.argmax(fv))
        if ft < fv[worst] and worst != 0:
            sim[worst] = xt
            fv[worst] = ft
        D = sim[1:] - sim[0]
        dist = np.linalg.norm(D, axis=1)
        far = int(np.argmax(dist))
        _, sv, vt = np.linalg.svd(D)
        flat = sv[-1] < 0.1 * rho
        if dist[far] > 2.0 * rho or flat:
            if len(trace) >= maxfev:
                return done(False, "evaluation budget exhausted")
            # geometry step: pull the farthest vertex back inside the radius,
            # along the direction the simplex is missing if it has collapsed
            step = vt[-1] * (-1.0 if g @ vt[-1] > 0 else 1.0) if flat else D[far] / dist[far]
            sim[far + 1] = sim[0] + rho * step
            fv[far + 1] = f(sim[far + 1])
            continue
        rho *= 0.5
        if rho < rho_end:
            return done(True, "trust radius below rho_end")

