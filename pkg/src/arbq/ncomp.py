"""NchooseK constraint programs for the arbitrage problem and their QUBO compilation.

A constraint ``nck(N, K)`` holds when the number of true variables in ``N``
is a member of ``K``.  The arbitrage program pins exactly one outgoing and
one incoming edge per currency (hard) and rewards individual edges in
proportion to their log rate (soft).
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .market import RateTable
from .qubo import EdgeVarIndex, Qubo

__all__ = [
    "DEFAULT_SOFT_SCALE",
    "NckConstraint",
    "NckProgram",
    "NckReport",
    "UnsupportedConstraintError",
    "var_name",
    "soft_repetitions",
    "build_arbitrage_program",
    "default_hard_weight",
    "compile_to_qubo",
    "check",
]

DEFAULT_SOFT_SCALE = 100


class UnsupportedConstraintError(ValueError):
    pass


@dataclass(frozen=True)
class NckConstraint:
    vars: tuple[str, ...]
    select: frozenset[int]
    kind: str = "hard"
    weight: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "vars", tuple(self.vars))
        object.__setattr__(self, "select", frozenset(int(k) for k in self.select))
        if not self.select:
            raise ValueError("selection set must be non-empty")
        if any(k < 0 or k > len(self.vars) for k in self.select):
            raise ValueError(f"selection {sorted(self.select)} out of range for {len(self.vars)} variables")
        if self.kind not in ("hard", "soft"):
            raise ValueError(f"kind must be 'hard' or 'soft', not {self.kind!r}")
        if self.weight < 0:
            raise ValueError("soft weight must be non-negative")

    def satisfied(self, assignment: dict[str, int]) -> bool:
        return sum(assignment[v] for v in self.vars) in self.select

    def describe(self) -> str:
        soft = ", soft" if self.kind == "soft" else ""
        return f"nck({{{', '.join(self.vars)}}}, {{{', '.join(map(str, sorted(self.select)))}}}{soft})"


@dataclass
class NckProgram:
    variables: dict[str, int]
    constraints: list[NckConstraint]
    soft_scale: int = DEFAULT_SOFT_SCALE
    var_index: EdgeVarIndex | None = None

    def __post_init__(self):
        for c in self.constraints:
            missing = [v for v in c.vars if v not in self.variables]
            if missing:
                raise ValueError(f"unbound variables {missing} in {c.describe()}")

    @property
    def hard(self) -> list[NckConstraint]:
        return [c for c in self.constraints if c.kind == "hard"]

    @property
    def soft(self) -> list[NckConstraint]:
        return [c for c in self.constraints if c.kind == "soft"]

    def to_json(self) -> str:
        doc = {
            "soft_scale": self.soft_scale,
            "variables": self.variables,
            "constraints": [
                {"vars": list(c.vars), "K": sorted(c.select), "kind": c.kind, "weight": c.weight}
                for c in self.constraints
            ],
        }
        return json.dumps(doc, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "NckProgram":
        doc = json.loads(text)
        cons = [NckConstraint(tuple(c["vars"]), frozenset(c["K"]), c["kind"], c["weight"]) for c in doc["constraints"]]
        variables = dict(doc["variables"])
        return cls(variables, cons, doc["soft_scale"], _index_from_names(variables))


def _index_from_names(variables: dict[str, int]) -> EdgeVarIndex | None:
    """Recover the edge index from ``SRC_DST`` names, or None if they do not form one."""
    codes: list[str] = []
    for name in sorted(variables, key=variables.get):
        for code in name.split("_", 1):
            if code not in codes:
                codes.append(code)
    if len(codes) < 2:
        return None
    index = EdgeVarIndex(tuple(codes))
    expected = {var_name(*index.label(v)): v for v in range(index.q)}
    return index if expected == variables else None


def var_name(src: str, dst: str) -> str:
    return f"{src}_{dst}"


def soft_repetitions(table: RateTable, soft_scale: int) -> dict[tuple[int, int], int]:
    """Integer repetition count per edge: log rate min-max scaled onto ``0..soft_scale``."""
    n = table.n
    logs = {(i, j): math.log(table.rates[i, j]) for i in range(n) for j in range(n) if i != j}
    lo, hi = min(logs.values()), max(logs.values())
    if hi == lo:
        warnings.warn("all log rates are equal; soft constraints carry no preference", stacklevel=2)
        return {e: 0 for e in logs}
    return {e: int(round(soft_scale * max(0.0, l - lo) / (hi - lo))) for e, l in logs.items()}


def build_arbitrage_program(table: RateTable, soft_scale: int = DEFAULT_SOFT_SCALE) -> NckProgram:
    if soft_scale < 0 or int(soft_scale) != soft_scale:
        raise ValueError("soft_scale must be a non-negative integer")
    index = EdgeVarIndex(table.codes)
    names = {var_name(*index.label(v)): v for v in range(index.q)}
    codes = table.codes
    cons: list[NckConstraint] = []
    for i in range(table.n):
        cons.append(NckConstraint(tuple(var_name(codes[i], codes[j]) for j in range(table.n) if j != i), {1}))
    for j in range(table.n):
        cons.append(NckConstraint(tuple(var_name(codes[i], codes[j]) for i in range(table.n) if i != j), {1}))
    reps = soft_repetitions(table, int(soft_scale))
    for v in range(index.q):
        i, j = index.pair_of(v)
        cons.append(NckConstraint((var_name(codes[i], codes[j]),), {1}, "soft", float(reps[(i, j)])))
    return NckProgram(names, cons, int(soft_scale), index)


def default_hard_weight(program: NckProgram) -> float:
    return 10.0 * program.soft_scale if program.soft_scale > 0 else 1.0


def compile_to_qubo(program: NckProgram, hard_weight: float | None = None) -> Qubo:
    """Hard ``nck(N, {k})`` becomes ``hard_weight * (sum N - k)^2``; soft ``nck({v}, {1})`` becomes ``-w * v``."""
    if hard_weight is None:
        hard_weight = default_hard_weight(program)
    if hard_weight <= 0:
        raise ValueError("hard_weight must be positive")
    index = program.var_index
    if index is None:
        raise ValueError("program has no edge-variable index to compile against")
    out = Qubo(index)
    for c in program.constraints:
        if len(c.select) != 1:
            raise UnsupportedConstraintError(f"only singleton selection sets compile: {c.describe()}")
        (k,) = c.select
        vs = [program.variables[name] for name in c.vars]
        if c.kind == "hard":
            # (sum x - k)^2 = sum x (1 - 2k) + 2 sum_{a<b} x_a x_b + k^2
            out.offset += hard_weight * k * k
            for a, u in enumerate(vs):
                out.add_linear(u, hard_weight * (1 - 2 * k))
                for w in vs[a + 1:]:
                    out.add_quadratic(u, w, 2.0 * hard_weight)
        else:
            if len(vs) != 1 or k != 1:
                raise UnsupportedConstraintError(f"soft constraints must be nck({{v}}, {{1}}): {c.describe()}")
            if c.weight:
                out.add_linear(vs[0], -c.weight)
    return out


@dataclass
class NckReport:
    satisfied: list[bool]
    hard_satisfied: bool
    soft_weight: float
    violated: list[str] = field(default_factory=list)


def check(program: NckProgram, x) -> NckReport:
    if isinstance(x, str):
        bits = [int(ch) for ch in x]
    else:
        bits = [int(b) for b in np.asarray(x).ravel()]
    if len(bits) != len(program.variables):
        raise ValueError(f"assignment has {len(bits)} bits, program binds {len(program.variables)} variables")
    assignment = {name: bits[v] for name, v in program.variables.items()}
    flags = [c.satisfied(assignment) for c in program.constraints]
    hard_ok = all(f for f, c in zip(flags, program.constraints) if c.kind == "hard")
    soft = sum(c.weight for f, c in zip(flags, program.constraints) if c.kind == "soft" and f)
    violated = [c.describe() for f, c in zip(flags, program.constraints) if c.kind == "hard" and not f]
    return NckReport(flags, hard_ok, float(soft), violated)
