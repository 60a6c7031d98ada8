"""Statevector QAOA over the Ising form of a QUBO.

Basis index ``k`` encodes the assignment with ``x_v = (k >> v) & 1``.  The
cost layer multiplies amplitude ``k`` by ``exp(-i * gamma * E(k))`` using a
precomputed diagonal of Ising energies, and the mixer applies
``exp(-i * beta * X)`` to every qubit.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels
from .anneal import CapacityError, Record, SampleSet
from .optim import TraceRow, minimize_linear_tr
from .qubo import IsingModel, Qubo, energy, to_ising

__all__ = [
    "QUBIT_LIMIT",
    "REFERENCE_PARAMS",
    "QaoaParams",
    "QaoaState",
    "CircuitMetrics",
    "OptimizeResult",
    "statevector_bytes",
    "prepare_uniform",
    "ising_diagonal",
    "qubo_diagonal",
    "apply_cost_layer",
    "apply_mixer_layer",
    "evolve",
    "expectation",
    "sample",
    "optimize",
    "circuit_metrics",
    "trace_to_csv",
]

QUBIT_LIMIT = 24


@dataclass(frozen=True)
class QaoaParams:
    gammas: tuple[float, ...]
    betas: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "gammas", tuple(float(g) for g in self.gammas))
        object.__setattr__(self, "betas", tuple(float(b) for b in self.betas))
        if len(self.gammas) != len(self.betas):
            raise ValueError("need one beta per gamma")

    @property
    def p(self) -> int:
        return len(self.gammas)

    def as_vector(self) -> np.ndarray:
        return np.array(self.gammas + self.betas)

    @classmethod
    def from_vector(cls, v) -> "QaoaParams":
        v = np.asarray(v, dtype=np.float64)
        p = v.size // 2
        return cls(tuple(v[:p]), tuple(v[p:]))


# 4-layer angles reported for the 4-currency run
REFERENCE_PARAMS = QaoaParams((1.569, 2.811, 1.555, 1.544), (1.522, 2.556, 2.696, 1.591))


@dataclass
class QaoaState:
    amplitudes: np.ndarray
    num_qubits: int

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


def statevector_bytes(q: int) -> int:
    return (1 << q) * 16


def _check_limit(q: int, limit: int) -> None:
    if q > limit:
        gib = statevector_bytes(q) / 2**30
        raise CapacityError(f"{q} qubits exceeds the statevector limit of {limit} ({gib:g} GiB of amplitudes)")


def prepare_uniform(q: int, limit: int = QUBIT_LIMIT) -> QaoaState:
    _check_limit(q, limit)
    N = 1 << q
    return QaoaState(np.full(N, 1.0 / math.sqrt(N), dtype=np.complex128), q)


def ising_diagonal(model: IsingModel) -> np.ndarray:
    """Ising energy of every basis state, with spin ``s_v = 1 - 2 x_v``."""
    # rewrite the spin polynomial over bits and reuse the QUBO table kernel
    q = model.num_variables
    lin = np.zeros(q)
    J = np.zeros((q, q))
    off = model.offset
    for v, h in model.h.items():
        off += h
        lin[v] -= 2.0 * h
    for (u, v), c in model.J.items():
        off += c
        lin[u] -= 2.0 * c
        lin[v] -= 2.0 * c
        J[u, v] += 4.0 * c
        J[v, u] += 4.0 * c
    return kernels.energy_table(lin, J, off)


def qubo_diagonal(q: Qubo) -> np.ndarray:
    lin, J, off = q.dense()
    return kernels.energy_table(lin, J, off)


def apply_cost_layer(state: QaoaState, ising: IsingModel | np.ndarray, gamma: float) -> QaoaState:
    diag = ising if isinstance(ising, np.ndarray) else ising_diagonal(ising)
    if diag.shape[0] != state.amplitudes.shape[0]:
        raise ValueError("cost diagonal does not match the state dimension")
    kernels.apply_phase(state.amplitudes, diag, float(gamma))
    return state


def apply_mixer_layer(state: QaoaState, beta: float) -> QaoaState:
    kernels.apply_mixer(state.amplitudes, float(beta))
    return state


def evolve(diag: np.ndarray, params: QaoaParams, limit: int = QUBIT_LIMIT) -> QaoaState:
    q = diag.shape[0].bit_length() - 1
    state = prepare_uniform(q, limit)
    for g, b in zip(params.gammas, params.betas):
        apply_cost_layer(state, diag, g)
        apply_mixer_layer(state, b)
    return state


def expectation(
    q: Qubo,
    params: QaoaParams,
    mode: str | int = "exact",
    seed: int = 0,
    limit: int = QUBIT_LIMIT,
) -> float:
    """Mean QUBO energy of the QAOA state; ``mode`` is ``"exact"`` or a shot count."""
    _check_limit(q.num_variables, limit)
    ediag = qubo_diagonal(q)
    state = evolve(ising_diagonal(to_ising(q)), params, limit)
    probs = state.probabilities()
    if mode == "exact":
        return float(probs @ ediag)
    idx = _draw(probs, int(mode), seed)
    return float(ediag[idx].mean())


def _draw(probs: np.ndarray, shots: int, seed: int) -> np.ndarray:
    if shots < 1:
        raise ValueError("shots must be >= 1")
    cdf = np.cumsum(probs)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, 0x9A0A])))
    u = rng.random(shots) * cdf[-1]
    return np.minimum(np.searchsorted(cdf, u, side="right"), probs.shape[0] - 1)


def sample(q: Qubo, params: QaoaParams, shots: int = 1024, seed: int = 0, limit: int = QUBIT_LIMIT) -> SampleSet:
    """Measure the QAOA state ``shots`` times in the computational basis."""
    nv = q.num_variables
    _check_limit(nv, limit)
    state = evolve(ising_diagonal(to_ising(q)), params, limit)
    idx = _draw(state.probabilities(), shots, seed)
    values, counts = np.unique(idx, return_counts=True)
    records = []
    for k, c in zip(values, counts):
        bits = "".join(str((int(k) >> v) & 1) for v in range(nv))
        records.append(Record(bits, energy(q, bits), int(c)))
    cfg = {"shots": shots, "seed": seed, "gammas": list(params.gammas), "betas": list(params.betas)}
    return SampleSet(records, "qaoa", cfg)


@dataclass
class OptimizeResult:
    params: QaoaParams
    objective: float
    converged: bool
    message: str
    trace: list[TraceRow] = field(default_factory=list)


def optimize(
    q: Qubo,
    p: int,
    maxiter: int = 100,
    seed: int = 0,
    mode: str | int = "exact",
    limit: int = QUBIT_LIMIT,
    rho_begin: float = 0.5,
    screen: int = 10,
) -> OptimizeResult:
    """Tune ``2p`` angles to minimise the expected QUBO energy.

    The search runs over ``(gamma * s, beta)`` with ``s`` the largest
    absolute QUBO coefficient, so one unit of search distance is a phase of
    about one radian on the largest term whatever the instance scale.
    ``screen`` random points drawn uniformly from ``(0, pi)`` in these units
    are evaluated first and the best seeds the local search.  ``maxiter``
    bounds the total number of objective evaluations, screening included;
    ``trace`` holds one row per evaluation with unscaled angles.
    """
    if p < 1:
        raise ValueError("need at least one layer")
    nv = q.num_variables
    _check_limit(nv, limit)
    ediag = qubo_diagonal(q)
    idiag = ising_diagonal(to_ising(q))
    scale = q.max_abs_coefficient() or 1.0
    unscale = np.r_[np.full(p, 1.0 / scale), np.ones(p)]
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, 0x0A0A])))

    def objective(u):
        state = evolve(idiag, QaoaParams.from_vector(u * unscale), limit)
        probs = state.probabilities()
        if mode == "exact":
            return float(probs @ ediag)
        return float(ediag[_draw(probs, int(mode), seed)].mean())

    screen = max(1, min(screen, maxiter))
    cands = rng.uniform(0.0, math.pi, (screen, 2 * p))
    vals = [objective(c) for c in cands]
    k = int(np.argmin(vals))
    trace = []
    best = np.inf
    for i, (c, v) in enumerate(zip(cands, vals)):
        best = min(best, v)
        trace.append(TraceRow(i + 1, v, best, c * unscale))
    budget = maxiter - screen
    if budget <= 0:
        return OptimizeResult(QaoaParams.from_vector(cands[k] * unscale), vals[k], False, "evaluation budget exhausted", trace)
    res = minimize_linear_tr(objective, cands[k], rho_begin=rho_begin, maxfev=budget)
    for row in res.trace:
        best = min(best, row.objective)
        trace.append(TraceRow(screen + row.iteration, row.objective, best, row.params * unscale))
    if res.fun <= vals[k]:
        x, fun = res.x, res.fun
    else:
        x, fun = cands[k], vals[k]
    return OptimizeResult(QaoaParams.from_vector(x * unscale), fun, res.converged, res.message, trace)


def trace_to_csv(trace: Sequence[TraceRow]) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    if not trace:
        w.writerow(["iteration", "objective", "running_best"])
        return out.getvalue()
    p = len(trace[0].params) // 2
    w.writerow(["iteration", "objective", "running_best"] + [f"gamma{k + 1}" for k in range(p)] + [f"beta{k + 1}" for k in range(p)])
    for row in trace:
        w.writerow([row.iteration, repr(row.objective), repr(row.running_best)] + [repr(float(a)) for a in row.params])
    return out.getvalue()


@dataclass(frozen=True)
class CircuitMetrics:
    qubits: int
    gates: int
    two_qubit_gates: int
    depth: int

    @property
    def single_qubit_gates(self) -> int:
        return self.gates - self.two_qubit_gates


def _edge_colouring(edges: list[tuple[int, int]]) -> list[list[tuple[int, int]]]:
    """Greedy proper edge colouring: each edge gets the lowest colour free at both ends."""
    used: dict[int, set[int]] = {}
    classes: list[list[tuple[int, int]]] = []
    for u, v in edges:
        busy = used.setdefault(u, set()) | used.setdefault(v, set())
        c = 0
        while c in busy:
            c += 1
        if c == len(classes):
            classes.append([])
        classes[c].append((u, v))
        used[u].add(c)
        used[v].add(c)
    return classes


def circuit_metrics(q: Qubo, p: int) -> CircuitMetrics:
    """Gate counts and depth of a textbook QAOA circuit for ``q``.

    Counting model: one Hadamard per qubit; per layer one ZZ rotation per
    nonzero coupling (issued colour class by colour class from a greedy edge
    colouring), one Z rotation per nonzero field and one X rotation per
    qubit.  Depth is the longest chain under as-soon-as-possible scheduling.
    No transpilation to a hardware gate set is modelled.
    """
    ising = to_ising(q)
    nq = q.num_variables
    couplings = sorted(k for k, c in ising.J.items() if c != 0.0)
    fields = sorted(v for v, c in ising.h.items() if c != 0.0)
    colour_classes = _edge_colouring(couplings)
    level = [1] * nq  # after the Hadamard layer
    gates = nq
    two = 0
    for _ in range(p):
        for cls in colour_classes:
            for u, v in cls:
                t = max(level[u], level[v]) + 1
                level[u] = level[v] = t
                gates += 1
                two += 1
        for v in fields:
            level[v] += 1
            gates += 1
        for v in range(nq):
            level[v] += 1
            gates += 1
    depth = max(level, default=0) if nq else 0
    return CircuitMetrics(nq, gates, two, depth)
