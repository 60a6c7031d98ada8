"""Sampler backends: exhaustive enumeration and simulated annealing over a QUBO.

Every shot of :func:`solve_sa` draws from its own Philox stream keyed by
``(seed, shot)``, so a run is reproducible no matter how shots are blocked
or which kernel backend executes them.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import asdict, dataclass, field

import numpy as np

from . import kernels
from .qubo import ENERGY_TOL, Qubo, energy

__all__ = [
    "SamplerConfig",
    "Record",
    "SampleSet",
    "CapacityError",
    "EXACT_LIMIT",
    "solve_exact",
    "solve_sa",
    "resolve_schedule",
    "shot_rng",
]

EXACT_LIMIT = 22
_BLOCK = 64


class CapacityError(RuntimeError):
    """Problem too large for the requested backend."""


@dataclass(frozen=True)
class SamplerConfig:
    shots: int = 1000
    sweeps_per_shot: int = 1000
    seed: int = 0
    t_hot: float | None = None
    t_cold: float | None = None

    def __post_init__(self):
        if self.shots < 1:
            raise ValueError("shots must be >= 1")
        if self.sweeps_per_shot < 1:
            raise ValueError("sweeps_per_shot must be >= 1")
        if self.t_hot is not None and self.t_cold is not None and not self.t_hot > self.t_cold > 0:
            raise ValueError("need t_hot > t_cold > 0")


@dataclass(frozen=True)
class Record:
    bits: str
    energy: float
    frequency: int


def _sort_key(r: Record):
    return (round(r.energy, 9), -r.frequency, r.bits)


@dataclass
class SampleSet:
    records: list[Record]
    backend: str
    config: dict = field(default_factory=dict)
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        self.records = sorted(self.records, key=_sort_key)

    @property
    def first(self) -> Record:
        return self.records[0]

    @property
    def num_shots(self) -> int:
        return sum(r.frequency for r in self.records)

    def lowest(self, tol: float = ENERGY_TOL) -> list[Record]:
        e0 = self.records[0].energy
        return [r for r in self.records if r.energy <= e0 + tol]

    @classmethod
    def from_bits(cls, q: Qubo, rows: np.ndarray, backend: str, config: dict, info: dict | None = None):
        """Aggregate a (shots, q) 0/1 array into records with reference energies."""
        counts = Counter("".join(map(str, row)) for row in np.asarray(rows, dtype=np.int64))
        records = [Record(b, energy(q, b), f) for b, f in counts.items()]
        return cls(records, backend, config, info or {})

    def to_dict(self) -> dict:
        return {
            "backend": self.backend,
            "config": self.config,
            "info": self.info,
            "records": [asdict(r) for r in self.records],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_json(cls, text: str) -> "SampleSet":
        doc = json.loads(text)
        return cls([Record(**r) for r in doc["records"]], doc["backend"], doc.get("config", {}), doc.get("info", {}))


def solve_exact(q: Qubo, limit: int = EXACT_LIMIT, levels: int = 10, max_records: int = 4096) -> SampleSet:
    """Enumerate all ``2**q`` assignments.

    Returns every global minimiser plus all states on the next ``levels``
    distinct energy levels (levels closer than 1e-9 merge), each with
    frequency 1.  At most ``max_records`` states are listed; the true number
    of ground states is always reported in ``info["ground_count"]``.
    """
    nv = q.num_variables
    if nv > limit:
        raise CapacityError(f"exact enumeration limited to {limit} variables, QUBO has {nv}")
    lin, J, off = q.dense()
    E = kernels.energy_table(lin, J, off)
    chosen: list[np.ndarray] = []
    remaining = max_records
    ground_count = 0
    floor = -np.inf
    truncated = False
    for level in range(levels + 1):
        pending = E[E > floor]
        if pending.size == 0 or remaining <= 0:
            break
        e_lo = pending.min()
        idx = np.flatnonzero((E >= e_lo) & (E <= e_lo + ENERGY_TOL) & (E > floor))
        if level == 0:
            ground_count = int(idx.size)
        if idx.size > remaining:
            idx = idx[:remaining]
            truncated = True
        chosen.append(idx)
        remaining -= idx.size
        floor = e_lo + ENERGY_TOL
    states = np.concatenate(chosen)
    bits = (states[:, None] >> np.arange(nv)) & 1
    records = [Record("".join(map(str, row)), energy(q, row), 1) for row in bits]
    info = {"ground_count": ground_count, "truncated": truncated, "num_states": 1 << nv}
    return SampleSet(records, "exact", {"limit": limit, "levels": levels, "max_records": max_records}, info)


def resolve_schedule(q: Qubo, cfg: SamplerConfig) -> tuple[float, float]:
    """Temperature range: max |coefficient| down to 1e-3 * min nonzero |coefficient|."""
    t_hot = cfg.t_hot if cfg.t_hot is not None else q.max_abs_coefficient()
    t_cold = cfg.t_cold if cfg.t_cold is not None else 1e-3 * q.min_abs_nonzero_coefficient()
    if t_hot <= 0 or t_cold <= 0:
        # all-zero QUBO: any schedule leaves the state untouched
        t_hot, t_cold = 1.0, 1e-3
    if not t_hot > t_cold:
        raise ValueError(f"schedule needs t_hot > t_cold, got {t_hot} and {t_cold}")
    return float(t_hot), float(t_cold)


def shot_rng(seed: int, shot: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, shot])))


def solve_sa(q: Qubo, cfg: SamplerConfig = SamplerConfig(), backend: str | None = None) -> SampleSet:
    """Simulated annealing with ``cfg.shots`` independent restarts.

    Each shot starts from a uniformly random state and performs
    ``cfg.sweeps_per_shot`` sequential Metropolis sweeps under a geometric
    schedule; the final state of each shot is reported.
    """
    nv = q.num_variables
    lin, J, _ = q.dense()
    t_hot, t_cold = resolve_schedule(q, cfg)
    sweeps = cfg.sweeps_per_shot
    temps = np.geomspace(t_hot, t_cold, sweeps) if sweeps > 1 else np.array([t_cold])
    impl = kernels.get_backend(backend)
    finals = np.empty((cfg.shots, nv), dtype=np.int8)
    for start in range(0, cfg.shots, _BLOCK):
        stop = min(start + _BLOCK, cfg.shots)
        m = stop - start
        x0 = np.empty((m, nv), dtype=np.int8)
        thr = np.empty((m, sweeps, nv))
        for k in range(m):
            rng = shot_rng(cfg.seed, start + k)
            x0[k] = rng.integers(0, 2, nv, dtype=np.int8)
            thr[k] = rng.standard_exponential((sweeps, nv))
        finals[start:stop] = impl.anneal(lin, J, temps, x0, thr)
    config = {
        "shots": cfg.shots,
        "sweeps_per_shot": sweeps,
        "seed": cfg.seed,
        "t_hot": t_hot,
        "t_cold": t_cold,
    }
    return SampleSet.from_bits(q, finals, "sa", config)
