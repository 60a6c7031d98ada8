"""Bitstring decoding, cycle profits, the exhaustive cycle oracle and degeneracy histograms."""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .market import RateTable, to_graph
from .qubo import ENERGY_TOL, EdgeVarIndex

__all__ = [
    "PROFIT_EPS",
    "Cycle",
    "CycleReport",
    "DegeneracyHistogram",
    "canonical_rotation",
    "profit_of_cycle",
    "cycle_bits",
    "decode_bits",
    "enumerate_cycles",
    "count_simple_cycles",
    "best_cycle_oracle",
    "degeneracy_histogram",
]

PROFIT_EPS = 1e-12
ORACLE_MAX_N = 8


def canonical_rotation(codes: Sequence[str]) -> tuple[str, ...]:
    """Rotate a cycle to start at its alphabetically smallest code."""
    codes = tuple(codes)
    k = codes.index(min(codes))
    return codes[k:] + codes[:k]


def profit_of_cycle(cycle: Sequence[str], table: RateTable) -> float:
    """Product of rates along ``cycle`` including the closing edge back to the start."""
    if len(cycle) < 2:
        raise ValueError("a cycle needs at least two currencies")
    if len(set(cycle)) != len(cycle):
        raise ValueError(f"repeated currency in cycle {list(cycle)}")
    idx = [table.index(c) for c in cycle]
    p = 1.0
    for a, b in zip(idx, idx[1:] + idx[:1]):
        p *= float(table.rates[a, b])
    return p


@dataclass(frozen=True)
class Cycle:
    codes: tuple[str, ...]
    profit: float

    @property
    def length(self) -> int:
        return len(self.codes)

    @property
    def profitable(self) -> bool:
        return self.profit > 1.0 + PROFIT_EPS

    def path(self, arrow: str = " → ") -> str:
        return arrow.join(self.codes + self.codes[:1])


@dataclass
class CycleReport:
    cycles: list[Cycle]
    feasible: bool
    best_cycle: int | None
    bits: str
    energy: float | None = None
    frequency: int = 1
    dangling_edges: list[tuple[str, str]] = field(default_factory=list)

    @property
    def best(self) -> Cycle | None:
        return None if self.best_cycle is None else self.cycles[self.best_cycle]

    def to_dict(self) -> dict:
        return {
            "cycles": [
                {"codes": list(c.codes), "profit": c.profit, "length": c.length} for c in self.cycles
            ],
            "feasible": self.feasible,
            "best_cycle": self.best_cycle,
            "bits": self.bits,
            "energy": self.energy,
            "frequency": self.frequency,
            "dangling_edges": [list(e) for e in self.dangling_edges],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)


def _bits_str(x, q: int) -> str:
    if isinstance(x, str):
        s = x
    else:
        s = "".join("1" if int(b) else "0" for b in np.asarray(x).ravel())
    if len(s) != q:
        raise ValueError(f"bitstring has {len(s)} bits, expected {q}")
    if set(s) - {"0", "1"}:
        raise ValueError("bitstring must contain only 0 and 1")
    return s


def cycle_bits(cycle: Sequence[str], index: EdgeVarIndex) -> str:
    """Bitstring selecting exactly the edges of ``cycle``."""
    pos = {c: k for k, c in enumerate(index.codes)}
    bits = ["0"] * index.q
    k = len(cycle)
    for t in range(k):
        bits[index.index_of(pos[cycle[t]], pos[cycle[(t + 1) % k]])] = "1"
    return "".join(bits)


def _best_index(cycles: list[Cycle]) -> int | None:
    if not cycles:
        return None
    # max profit, ties broken by the lexicographically smallest canonical rotation
    return min(range(len(cycles)), key=lambda k: (-cycles[k].profit, cycles[k].codes))


def decode_bits(x, table: RateTable, index: EdgeVarIndex) -> CycleReport:
    """Split the selected edges into disjoint cycles by successor following.

    The report is feasible when every selected edge lies on a closed cycle
    and no currency has two outgoing or two incoming edges.  Edges that are
    not on a clean cycle are listed in ``dangling_edges``.
    """
    if index.n != table.n or index.codes != table.codes:
        raise ValueError("variable index does not match the rate table")
    bits = _bits_str(x, index.q)
    n = index.n
    edges = [index.pair_of(v) for v, b in enumerate(bits) if b == "1"]
    out_deg = [0] * n
    in_deg = [0] * n
    succ = [-1] * n
    for i, j in edges:
        out_deg[i] += 1
        in_deg[j] += 1
        succ[i] = j
    clean = [out_deg[i] <= 1 and in_deg[i] <= 1 for i in range(n)]

    used: set[tuple[int, int]] = set()
    cycles: list[Cycle] = []
    seen = [False] * n
    for start in range(n):
        if seen[start] or out_deg[start] == 0 or not clean[start]:
            continue
        walk = [start]
        seen[start] = True
        cur = succ[start]
        closed = False
        while cur >= 0 and clean[cur] and out_deg[cur] == 1:
            if cur == start:
                closed = True
                break
            if seen[cur]:
                break
            seen[cur] = True
            walk.append(cur)
            cur = succ[cur]
        if closed:
            codes = tuple(table.codes[i] for i in walk)
            cycles.append(Cycle(canonical_rotation(codes), profit_of_cycle(codes, table)))
            used.update(zip(walk, walk[1:] + walk[:1]))

    dangling = [(table.codes[i], table.codes[j]) for i, j in edges if (i, j) not in used]
    cycles.sort(key=lambda c: c.codes)
    return CycleReport(
        cycles=cycles,
        feasible=not dangling,
        best_cycle=_best_index(cycles),
        bits=bits,
        dangling_edges=dangling,
    )


def enumerate_cycles(n: int) -> Iterator[tuple[int, ...]]:
    """Every simple directed cycle of length 2..n, once, starting at its smallest node."""
    for k in range(2, n + 1):
        for comb in itertools.combinations(range(n), k):
            first = comb[0]
            for rest in itertools.permutations(comb[1:]):
                yield (first,) + rest


def count_simple_cycles(n: int) -> int:
    return sum(math.comb(n, k) * math.factorial(k - 1) for k in range(2, n + 1))


def best_cycle_oracle(table: RateTable, max_n: int = ORACLE_MAX_N) -> tuple[Cycle, bool]:
    """Exhaustively find the most profitable simple cycle.

    Returns ``(cycle, is_arbitrage)``; ``is_arbitrage`` is false when even the
    best cycle does not beat a profit of 1.
    """
    n = table.n
    if n > max_n:
        raise ValueError(f"exhaustive cycle search limited to {max_n} currencies, got {n}")
    best: Cycle | None = None
    for idx in enumerate_cycles(n):
        codes = canonical_rotation(tuple(table.codes[i] for i in idx))
        c = Cycle(codes, profit_of_cycle(codes, table))
        if best is None or c.profit > best.profit or (c.profit == best.profit and c.codes < best.codes):
            best = c
    assert best is not None
    return best, best.profitable


@dataclass
class DegeneracyHistogram:
    """Profit bins over the minimum-energy samples.

    Samples whose selection contains no closed cycle are binned at profit
    1.0 (no trade).
    """

    bins: list[tuple[float, int]]
    min_energy: float
    shots_at_min: int
    profitable_bins: int
    optimal_bins: int
    profitable_shots: int
    optimal_shots: int
    optimal_profit: float | None

    def to_csv(self) -> str:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["profit", "frequency", "is_profitable", "is_optimal"])
        for profit, freq in self.bins:
            w.writerow([repr(profit), freq, int(profit > 1.0 + PROFIT_EPS), int(self._is_opt(profit))])
        return out.getvalue()

    def _is_opt(self, profit: float) -> bool:
        return self.optimal_profit is not None and abs(profit - self.optimal_profit) <= ENERGY_TOL

    def summary(self) -> str:
        return (
            f"shots at minimum energy: {self.shots_at_min}, "
            f"profitable: {self.profitable_shots}, optimal: {self.optimal_shots}"
        )


def degeneracy_histogram(samples, table: RateTable, index: EdgeVarIndex) -> DegeneracyHistogram:
    records = list(samples.records)
    if not records:
        raise ValueError("empty sample set")
    e_min = min(r.energy for r in records)
    optimal = None
    if table.n <= ORACLE_MAX_N:
        optimal = best_cycle_oracle(table)[0].profit
    tally: dict[float, int] = {}
    for r in records:
        if r.energy > e_min + ENERGY_TOL:
            continue
        rep = decode_bits(r.bits, table, index)
        profit = rep.best.profit if rep.best is not None else 1.0
        # exact-value bins: merge profits equal to within 1e-9
        key = next((p for p in tally if abs(p - profit) <= ENERGY_TOL), profit)
        tally[key] = tally.get(key, 0) + r.frequency
    bins = sorted(tally.items())
    hist = DegeneracyHistogram(bins, e_min, sum(tally.values()), 0, 0, 0, 0, optimal)
    for p, f in bins:
        if p > 1.0 + PROFIT_EPS:
            hist.profitable_bins += 1
            hist.profitable_shots += f
        if hist._is_opt(p):
            hist.optimal_bins += 1
            hist.optimal_shots += f
    return hist
