"""Exchange-rate tables, the log-weight arbitrage graph and a Bellman-Ford baseline.

A :class:`RateTable` stores ``rates[i][j]``, the units of currency ``j``
received for one unit of currency ``i``.  The graph view assigns every
ordered pair ``i != j`` the weight ``-ln(rates[i][j])`` so that a cycle with
negative total weight is an arbitrage opportunity.
"""

from __future__ import annotations

import csv
import io
import json
import math
import re
from dataclasses import dataclass
from typing import IO, Sequence

import numpy as np

__all__ = [
    "RateTable",
    "ArbGraph",
    "RateTableError",
    "NonSquareError",
    "NonPositiveRateError",
    "DiagonalError",
    "DuplicateCodeError",
    "BadCodeError",
    "NEGATIVE_CYCLE_EPS",
    "FIXTURES",
    "fixture",
    "parse_rate_table",
    "load_rate_table",
    "dump_rate_table",
    "to_graph",
    "bellman_ford_negative_cycle",
]

NEGATIVE_CYCLE_EPS = 1e-12

_CODE_RE = re.compile(r"^[A-Z0-9]+$")


class RateTableError(ValueError):
    """Base class for malformed rate tables; carries the offending location."""

    def __init__(self, message: str, row: int | None = None, col: int | None = None):
        loc = []
        if row is not None:
            loc.append(f"row {row}")
        if col is not None:
            loc.append(f"column {col}")
        super().__init__(f"{message} ({', '.join(loc)})" if loc else message)
        self.row = row
        self.col = col


class NonSquareError(RateTableError):
    pass


class NonPositiveRateError(RateTableError):
    pass


class DiagonalError(RateTableError):
    pass


class DuplicateCodeError(RateTableError):
    pass


class BadCodeError(RateTableError):
    pass


@dataclass(frozen=True)
class RateTable:
    codes: tuple[str, ...]
    rates: np.ndarray

    def __post_init__(self):
        codes = tuple(self.codes)
        rates = np.array(self.rates, dtype=np.float64, copy=True)
        _validate(codes, rates)
        rates.setflags(write=False)
        object.__setattr__(self, "codes", codes)
        object.__setattr__(self, "rates", rates)

    @property
    def n(self) -> int:
        return len(self.codes)

    def index(self, code: str) -> int:
        try:
            return self.codes.index(code)
        except ValueError:
            raise KeyError(f"unknown currency code {code!r}") from None

    def rate(self, src: str, dst: str) -> float:
        return float(self.rates[self.index(src), self.index(dst)])

    def subset(self, codes: Sequence[str]) -> "RateTable":
        """Restrict the table to ``codes`` (in the given order)."""
        idx = [self.index(c) for c in codes]
        return RateTable(tuple(codes), self.rates[np.ix_(idx, idx)])

    def __eq__(self, other):
        if not isinstance(other, RateTable):
            return NotImplemented
        return self.codes == other.codes and np.array_equal(self.rates, other.rates)

    def __hash__(self):
        return hash((self.codes, self.rates.tobytes()))

    def to_dict(self) -> dict:
        return {"codes": list(self.codes), "rates": self.rates.tolist()}


def _validate(codes: tuple[str, ...], rates: np.ndarray) -> None:
    n = len(codes)
    if n < 2:
        raise NonSquareError(f"need at least 2 currencies, got {n}")
    seen: dict[str, int] = {}
    for k, code in enumerate(codes):
        if not isinstance(code, str) or not _CODE_RE.match(code):
            raise BadCodeError(f"currency code {code!r} is not uppercase alphanumeric", col=k)
        if code in seen:
            raise DuplicateCodeError(f"duplicate currency code {code!r}", col=k)
        seen[code] = k
    if rates.ndim != 2 or rates.shape[0] != n:
        raise NonSquareError(f"expected {n} rows for {n} codes, got shape {rates.shape}")
    if rates.shape[1] != n:
        raise NonSquareError(f"expected {n} columns, got {rates.shape[1]}", row=0)
    for i in range(n):
        for j in range(n):
            r = rates[i, j]
            if not (math.isfinite(r) and r > 0.0):
                raise NonPositiveRateError(f"rate {r!r} must be positive and finite", row=i, col=j)
        if rates[i, i] != 1.0:
            raise DiagonalError(f"diagonal rate for {codes[i]} is {rates[i, i]!r}, expected 1.0", row=i, col=i)


# Rate fixtures: 4-, 5- and 6-currency tables.  Reciprocal entries are kept
# as the reciprocals they are printed as.
_TABLE4 = (
    ("EUR", "USD", "CHF", "JPY"),
    [
        [1.0, 1.13217, 1.11777, 120.756],
        [1 / 1.13403, 1.0, 0.98804, 106.034],
        [1 / 1.12005, 1 / 0.99250, 1.0, 105.564],
        [1 / 120.887, 1 / 106.266, 1 / 108.042, 1.0],
    ],
)

_TABLE6_ROWS = [
    [1.0, 0.8953, 0.7682, 148.76, 1.5213, 1.3407],
    [1.1170, 1.0, 0.8586, 166.06, 1.6993, 1.4971],
    [1.3015, 1.1645, 1.0, 193.40, 1.9801, 1.7433],
    [0.0067, 0.0060, 0.0052, 1.0, 0.0102, 0.0090],
    [0.6572, 0.5885, 0.5050, 97.88, 1.0, 0.8814],
    [0.7457, 0.6684, 0.5738, 111.23, 1.1345, 1.0],
]

_TABLE5 = (
    ("USD", "EUR", "GBP", "JPY", "AUD"),
    [row[:5] for row in _TABLE6_ROWS[:5]],
)

_TABLE6 = (("USD", "EUR", "GBP", "JPY", "AUD", "CAD"), _TABLE6_ROWS)

FIXTURES = {"table4": _TABLE4, "table5": _TABLE5, "table6": _TABLE6}


def fixture(name: str) -> RateTable:
    """Return a built-in rate table: ``table4``, ``table5`` or ``table6``."""
    try:
        codes, rows = FIXTURES[name]
    except KeyError:
        raise KeyError(f"unknown fixture {name!r}; choose from {sorted(FIXTURES)}") from None
    return RateTable(codes, np.array(rows, dtype=np.float64))


def _parse_cell(text: str, row: int, col: int) -> float:
    s = text.strip()
    try:
        if "/" in s:
            num, den = s.split("/", 1)
            return float(num) / float(den)
        return float(s)
    except (ValueError, ZeroDivisionError):
        raise RateTableError(f"cannot parse rate {text!r}", row=row, col=col) from None


def _from_rows(codes: list[str], body: list[list[float]]) -> RateTable:
    n = len(codes)
    if len(body) != n:
        raise NonSquareError(f"expected {n} rows, got {len(body)}", row=len(body))
    for i, row in enumerate(body):
        if len(row) != n:
            raise NonSquareError(f"expected {n} columns, got {len(row)}", row=i)
    return RateTable(tuple(codes), np.array(body, dtype=np.float64).reshape(n, n))


def _parse_csv(text: str) -> RateTable:
    rows = [r for r in csv.reader(io.StringIO(text)) if any(c.strip() for c in r)]
    if not rows:
        raise RateTableError("empty rate table")
    header = rows[0]
    if header[0].strip():
        raise RateTableError("first header cell must be empty", row=0, col=0)
    codes = [c.strip() for c in header[1:]]
    body = []
    for i, row in enumerate(rows[1:]):
        label = row[0].strip()
        if i < len(codes) and label != codes[i]:
            raise RateTableError(f"row label {label!r} does not match header code {codes[i]!r}", row=i, col=0)
        body.append([_parse_cell(c, i, j) for j, c in enumerate(row[1:])])
    return _from_rows(codes, body)


def _parse_json(text: str) -> RateTable:
    try:
        doc = json.loads(text)
        codes = list(doc["codes"])
        raw = doc["rates"]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise RateTableError(f"malformed JSON rate table: {exc}") from None
    body = []
    for i, row in enumerate(raw):
        body.append([_parse_cell(str(v), i, j) if isinstance(v, str) else float(v) for j, v in enumerate(row)])
    return _from_rows(codes, body)


def parse_rate_table(source: str | IO[str], format: str = "csv") -> RateTable:
    """Parse a rate table from CSV or JSON text (or a text stream).

    CSV layout: empty first cell, then the codes; each subsequent row starts
    with its code.  Cells may be written as ``1/x`` for reciprocal quotes.
    JSON layout: ``{"codes": [...], "rates": [[...], ...]}``.
    """
    text = source if isinstance(source, str) else source.read()
    if format == "csv":
        return _parse_csv(text)
    if format == "json":
        return _parse_json(text)
    raise ValueError(f"unsupported format {format!r}")


def load_rate_table(path: str) -> RateTable:
    fmt = "json" if str(path).lower().endswith(".json") else "csv"
    with open(path, encoding="utf-8") as fh:
        return parse_rate_table(fh, fmt)


def dump_rate_table(table: RateTable, format: str = "csv") -> str:
    # repr() of a float is the shortest string that round-trips exactly
    if format == "json":
        return json.dumps(table.to_dict())
    if format != "csv":
        raise ValueError(f"unsupported format {format!r}")
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow([""] + list(table.codes))
    for code, row in zip(table.codes, table.rates):
        w.writerow([code] + [repr(float(r)) for r in row])
    return out.getvalue()


@dataclass(frozen=True)
class ArbGraph:
    """Complete directed graph on ``n`` currencies with ``-ln(rate)`` weights."""

    codes: tuple[str, ...]
    weights: np.ndarray  # n x n, diagonal unused (zero)

    @property
    def n(self) -> int:
        return len(self.codes)

    def edges(self):
        n = self.n
        for i in range(n):
            for j in range(n):
                if i != j:
                    yield i, j, float(self.weights[i, j])

    def cycle_weight(self, cycle: Sequence[int]) -> float:
        k = len(cycle)
        return float(sum(self.weights[cycle[t], cycle[(t + 1) % k]] for t in range(k)))


def to_graph(table: RateTable) -> ArbGraph:
    w = -np.log(table.rates)
    np.fill_diagonal(w, 0.0)
    w.setflags(write=False)
    return ArbGraph(table.codes, w)


def bellman_ford_negative_cycle(graph: ArbGraph, eps: float = NEGATIVE_CYCLE_EPS) -> list[int]:
    """Return a negative-weight simple cycle as a list of node indices, or ``[]``.

    Uses a virtual source joined to every node with weight 0, so any negative
    cycle in the graph is reachable.  Relaxations smaller than ``eps`` are
    ignored to keep floating-point noise on consistent tables from producing
    spurious cycles.
    """
    n = graph.n
    w = graph.weights
    dist = np.zeros(n)
    pred = [-1] * n
    edges = list(graph.edges())
    last = -1
    for _ in range(n):
        last = -1
        for u, v, wt in edges:
            cand = dist[u] + wt
            if cand < dist[v] - eps:
                dist[v] = cand
                pred[v] = u
                last = v
        if last < 0:
            return []
    # last was relaxed on the n-th pass: walking back n steps lands on a cycle
    x = last
    for _ in range(n):
        x = pred[x]
    cycle = [x]
    y = pred[x]
    while y != x:
        cycle.append(y)
        y = pred[y]
    cycle.reverse()
    k = len(cycle)
    total = sum(w[cycle[t], cycle[(t + 1) % k]] for t in range(k))
    return cycle if total < -eps else []
