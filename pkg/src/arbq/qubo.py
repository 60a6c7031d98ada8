"""Arbitrage QUBO construction, energy evaluation and Ising conversion.

Decision variable ``v`` selects the directed edge ``pair_of(v) = (i, j)``.
The objective is

    C_tot(x) = C(x) + m_p * (P(x) + F(x))

with the linear log-rate cost ``C``, the pairwise "at most one outgoing /
at most one incoming" penalty ``P`` and the flow-balance term
``F = sum_i (out_i - in_i)^2`` which forbids open paths.  ``P`` alone admits
dangling paths (e.g. ``EUR->JPY`` plus ``CHF->USD`` on the 4-currency table)
whose log gain dwarfs any closed cycle, so both terms are needed before the
minimiser is a set of disjoint cycles.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .market import ArbGraph, RateTable, to_graph

__all__ = [
    "EdgeVarIndex",
    "Qubo",
    "IsingModel",
    "ENERGY_TOL",
    "build_cost",
    "build_penalty",
    "build_closure",
    "build_constraints",
    "compose",
    "default_penalty_weight",
    "build_objective",
    "energy",
    "to_ising",
    "ising_energy",
    "SweepPoint",
    "sweep_penalty",
]

ENERGY_TOL = 1e-9


@dataclass(frozen=True)
class EdgeVarIndex:
    """Row-major bijection between ordered pairs ``(i, j), i != j`` and ``0..q-1``."""

    codes: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "codes", tuple(self.codes))

    @property
    def n(self) -> int:
        return len(self.codes)

    @property
    def q(self) -> int:
        return self.n * (self.n - 1)

    def __len__(self) -> int:
        return self.q

    def index_of(self, i: int, j: int) -> int:
        n = self.n
        if not (0 <= i < n and 0 <= j < n) or i == j:
            raise IndexError(f"no variable for pair ({i}, {j})")
        return i * (n - 1) + (j if j < i else j - 1)

    def pair_of(self, v: int) -> tuple[int, int]:
        if not 0 <= v < self.q:
            raise IndexError(f"variable {v} out of range 0..{self.q - 1}")
        i, r = divmod(v, self.n - 1)
        return i, (r if r < i else r + 1)

    def pairs(self) -> list[tuple[int, int]]:
        return [self.pair_of(v) for v in range(self.q)]

    def label(self, v: int) -> tuple[str, str]:
        i, j = self.pair_of(v)
        return self.codes[i], self.codes[j]

    def row(self, i: int) -> list[int]:
        return [self.index_of(i, j) for j in range(self.n) if j != i]

    def col(self, j: int) -> list[int]:
        return [self.index_of(i, j) for i in range(self.n) if i != j]


def _key(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


@dataclass
class Qubo:
    """Sparse quadratic pseudo-Boolean function over the edge variables."""

    var_index: EdgeVarIndex
    linear: dict[int, float] = field(default_factory=dict)
    quadratic: dict[tuple[int, int], float] = field(default_factory=dict)
    offset: float = 0.0

    @property
    def num_variables(self) -> int:
        return self.var_index.q

    def add_linear(self, v: int, c: float) -> None:
        self.linear[v] = self.linear.get(v, 0.0) + c

    def add_quadratic(self, u: int, v: int, c: float) -> None:
        if u == v:
            # x^2 == x for binary x
            self.add_linear(u, c)
            return
        k = _key(u, v)
        self.quadratic[k] = self.quadratic.get(k, 0.0) + c

    def copy(self) -> "Qubo":
        return Qubo(self.var_index, dict(self.linear), dict(self.quadratic), self.offset)

    def scaled(self, factor: float) -> "Qubo":
        return Qubo(
            self.var_index,
            {v: factor * c for v, c in self.linear.items()},
            {k: factor * c for k, c in self.quadratic.items()},
            factor * self.offset,
        )

    def __add__(self, other: "Qubo") -> "Qubo":
        if not isinstance(other, Qubo):
            return NotImplemented
        if other.var_index != self.var_index:
            raise ValueError("cannot add QUBOs over different variable index spaces")
        out = self.copy()
        for v, c in other.linear.items():
            out.add_linear(v, c)
        for (u, v), c in other.quadratic.items():
            out.add_quadratic(u, v, c)
        out.offset += other.offset
        return out

    def dense(self) -> tuple[np.ndarray, np.ndarray, float]:
        """Return ``(linear, coupling, offset)`` arrays.

        ``coupling`` is symmetric with a zero diagonal and holds each pair
        coefficient in both triangles, so ``linear + coupling @ x`` is the
        flip field used by the samplers.
        """
        q = self.num_variables
        lin = np.zeros(q)
        J = np.zeros((q, q))
        for v, c in self.linear.items():
            lin[v] += c
        for (u, v), c in self.quadratic.items():
            J[u, v] += c
            J[v, u] += c
        return lin, J, float(self.offset)

    def max_abs_coefficient(self) -> float:
        vals = [abs(c) for c in self.linear.values()] + [abs(c) for c in self.quadratic.values()]
        return max(vals, default=0.0)

    def min_abs_nonzero_coefficient(self) -> float:
        vals = [abs(c) for c in self.linear.values() if c != 0.0]
        vals += [abs(c) for c in self.quadratic.values() if c != 0.0]
        return min(vals, default=0.0)

    def to_json(self) -> str:
        doc = {
            "offset": self.offset,
            "linear": {str(v): c for v, c in sorted(self.linear.items())},
            "quadratic": {f"{u},{v}": c for (u, v), c in sorted(self.quadratic.items())},
            "index": [list(self.var_index.label(v)) for v in range(self.num_variables)],
        }
        return json.dumps(doc, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "Qubo":
        doc = json.loads(text)
        labels = [tuple(p) for p in doc["index"]]
        codes: list[str] = []
        for a, _ in labels:
            if a not in codes:
                codes.append(a)
        index = EdgeVarIndex(tuple(codes))
        if [index.label(v) for v in range(index.q)] != labels:
            raise ValueError("index in QUBO JSON is not row-major over the listed codes")
        quad = {}
        for k, c in doc["quadratic"].items():
            u, v = (int(s) for s in k.split(","))
            quad[_key(u, v)] = float(c)
        return cls(index, {int(v): float(c) for v, c in doc["linear"].items()}, quad, float(doc["offset"]))


@dataclass
class IsingModel:
    h: dict[int, float]
    J: dict[tuple[int, int], float]
    offset: float
    num_variables: int


def _as_bits(x, q: int) -> np.ndarray:
    if isinstance(x, str):
        bits = np.frombuffer(x.encode("ascii"), dtype=np.uint8) - ord("0")
    else:
        bits = np.asarray(x, dtype=np.int64).ravel()
    if bits.shape[0] != q:
        raise ValueError(f"assignment has {bits.shape[0]} bits, QUBO has {q} variables")
    if np.any((bits != 0) & (bits != 1)):
        raise ValueError("assignment must be binary")
    return bits.astype(np.int64)


def energy(q: Qubo, x) -> float:
    """Evaluate ``offset + sum linear*x + sum quadratic*x_u*x_v`` for one assignment."""
    bits = _as_bits(x, q.num_variables)
    e = q.offset
    for v, c in q.linear.items():
        if bits[v]:
            e += c
    for (u, v), c in q.quadratic.items():
        if bits[u] and bits[v]:
            e += c
    return float(e)


def build_cost(graph: ArbGraph) -> Qubo:
    idx = EdgeVarIndex(graph.codes)
    out = Qubo(idx)
    for i, j, w in graph.edges():
        out.linear[idx.index_of(i, j)] = w
    return out


def build_penalty(n: int, var_index: EdgeVarIndex) -> Qubo:
    """Pairwise penalty: +1 for every two selected edges sharing a tail or a head."""
    if n < 2:
        raise ValueError("need n >= 2")
    if var_index.n != n:
        raise ValueError(f"variable index is for {var_index.n} currencies, not {n}")
    out = Qubo(var_index)
    for i in range(n):
        for group in (var_index.row(i), var_index.col(i)):
            for a in range(len(group)):
                for b in range(a + 1, len(group)):
                    out.add_quadratic(group[a], group[b], 1.0)
    return out


def build_closure(n: int, var_index: EdgeVarIndex) -> Qubo:
    """Flow-balance penalty ``sum_i (out_i - in_i)^2``; zero exactly on unions of cycles."""
    if var_index.n != n:
        raise ValueError(f"variable index is for {var_index.n} currencies, not {n}")
    out = Qubo(var_index)
    for i in range(n):
        terms = [(v, 1.0) for v in var_index.row(i)] + [(v, -1.0) for v in var_index.col(i)]
        for a, (u, cu) in enumerate(terms):
            out.add_linear(u, cu * cu)
            for v, cv in terms[a + 1:]:
                out.add_quadratic(u, v, 2.0 * cu * cv)
    return out


def build_constraints(var_index: EdgeVarIndex) -> Qubo:
    """Full constraint penalty used in the composed objective (pairwise + closure)."""
    n = var_index.n
    return build_penalty(n, var_index) + build_closure(n, var_index)


def compose(cost: Qubo, penalty: Qubo, m_p: float) -> Qubo:
    if m_p < 0:
        raise ValueError("penalty weight must be non-negative")
    if cost.var_index != penalty.var_index:
        raise ValueError("cost and penalty use different variable index spaces")
    return cost + penalty.scaled(float(m_p))


def default_penalty_weight(table: RateTable | ArbGraph) -> float:
    """``2 * max |ln r_ij|`` over off-diagonal entries."""
    graph = to_graph(table) if isinstance(table, RateTable) else table
    return 2.0 * max(abs(w) for _, _, w in graph.edges())


def build_objective(table: RateTable, m_p: float | str = "auto") -> tuple[Qubo, float]:
    """Composed arbitrage QUBO for ``table``; returns ``(qubo, resolved m_p)``."""
    graph = to_graph(table)
    if m_p == "auto" or m_p is None:
        m_p = default_penalty_weight(graph)
    cost = build_cost(graph)
    return compose(cost, build_constraints(cost.var_index), float(m_p)), float(m_p)


def to_ising(q: Qubo) -> IsingModel:
    """Substitute ``x = (1 - s) / 2``; ``s = +1`` corresponds to ``x = 0``."""
    h: dict[int, float] = {}
    J: dict[tuple[int, int], float] = {}
    offset = q.offset
    for v, c in q.linear.items():
        h[v] = h.get(v, 0.0) - c / 2.0
        offset += c / 2.0
    for (u, v), c in q.quadratic.items():
        # c * (1 - s_u)(1 - s_v) / 4
        J[(u, v)] = J.get((u, v), 0.0) + c / 4.0
        h[u] = h.get(u, 0.0) - c / 4.0
        h[v] = h.get(v, 0.0) - c / 4.0
        offset += c / 4.0
    return IsingModel(h, J, offset, q.num_variables)


def ising_energy(model: IsingModel, s) -> float:
    spins = np.asarray(s, dtype=np.int64).ravel()
    if spins.shape[0] != model.num_variables:
        raise ValueError("spin vector length mismatch")
    e = model.offset
    for v, c in model.h.items():
        e += c * spins[v]
    for (u, v), c in model.J.items():
        e += c * spins[u] * spins[v]
    return float(e)


@dataclass
class SweepPoint:
    m_p: float
    feasible_fraction: float = 0.0
    best_feasible: bool = False
    best_profit: float | None = None
    best_cycle: tuple[str, ...] | None = None
    error: str | None = None


def sweep_penalty(
    cost: Qubo,
    penalty: Qubo,
    grid: Sequence[float],
    solver: Callable[[Qubo], "object"],
    table: RateTable,
) -> tuple[list[SweepPoint], float | None]:
    """Solve ``cost + m_p * penalty`` for each ``m_p`` in ``grid`` and decode.

    Returns the per-point outcomes and the smallest ``m_p`` whose
    lowest-energy sample decodes to a feasible cycle set (``None`` if none
    does).  A failing solve is recorded on its grid point and the sweep goes on.
    """
    from .decode import decode_bits  # decode imports qubo

    if len(grid) == 0:
        raise ValueError("penalty grid must not be empty")
    points: list[SweepPoint] = []
    for m_p in grid:
        pt = SweepPoint(float(m_p))
        try:
            samples = solver(compose(cost, penalty, float(m_p)))
            total = sum(r.frequency for r in samples.records)
            feas = 0
            for r in samples.records:
                if decode_bits(r.bits, table, cost.var_index).feasible:
                    feas += r.frequency
            pt.feasible_fraction = feas / total if total else 0.0
            best = decode_bits(samples.records[0].bits, table, cost.var_index)
            pt.best_feasible = best.feasible
            if best.best_cycle is not None:
                cyc = best.cycles[best.best_cycle]
                pt.best_profit = cyc.profit
                pt.best_cycle = cyc.codes
        except Exception as exc:  # noqa: BLE001 - recorded per grid point
            pt.error = f"{type(exc).__name__}: {exc}"
        points.append(pt)
    recommended = None
    for pt in sorted(points, key=lambda p: p.m_p):
        if pt.error is None and pt.best_feasible:
            recommended = pt.m_p
            break
    return points, recommended
