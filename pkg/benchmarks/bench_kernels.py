"""Time the numba kernels against the pure-numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 3] [--json out.json]

Both backends run on identical inputs; outputs are compared so a speedup
never hides a wrong answer.  numba compile time is excluded by a warm-up
call on a tiny problem.
"""

from __future__ import annotations

import argparse
import json
import platform
import time

import numpy as np

from arbq import kernels
from arbq.anneal import SamplerConfig, resolve_schedule
from arbq.market import fixture
from arbq.qubo import build_objective


def _best_of(fn, repeat):
    times = []
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def energy_case(q):
    rng = np.random.default_rng(0)
    lin = rng.normal(size=q)
    J = np.triu(rng.normal(size=(q, q)), 1)
    J = J + J.T
    return lambda k: k.energy_table(lin, J, 0.0), lambda a, b: np.max(np.abs(a - b)) <= 1e-9


def anneal_case(shots, sweeps):
    q, _ = build_objective(fixture("table5"))
    lin, J, _ = q.dense()
    hot, cold = resolve_schedule(q, SamplerConfig())
    temps = np.geomspace(hot, cold, sweeps)
    rng = np.random.default_rng(1)
    x0 = rng.integers(0, 2, (shots, q.num_variables)).astype(np.int8)
    thr = rng.standard_exponential((shots, sweeps, q.num_variables))
    return lambda k: k.anneal(lin, J, temps, x0, thr), np.array_equal


def qaoa_case(q, layers):
    rng = np.random.default_rng(2)
    diag = rng.normal(size=1 << q)
    angles = rng.uniform(0, np.pi, (layers, 2))

    def run(k):
        psi = np.full(1 << q, 2 ** (-q / 2), dtype=np.complex128)
        for g, b in angles:
            k.apply_phase(psi, diag, g)
            k.apply_mixer(psi, b)
        return psi

    return run, lambda a, b: np.max(np.abs(a - b)) <= 1e-10


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--qubits", type=int, default=20, help="size of the energy-table and statevector cases")
    ap.add_argument("--shots", type=int, default=256)
    ap.add_argument("--sweeps", type=int, default=1000)
    ap.add_argument("--json", help="also write results here")
    args = ap.parse_args(argv)

    if not kernels.numba_available:
        raise SystemExit("numba is not importable; nothing to compare")
    nb, npk = kernels.get_backend("numba"), kernels.get_backend("numpy")

    cases = {
        f"energy_table q={args.qubits}": energy_case(args.qubits),
        f"anneal 20 vars, {args.shots} shots x {args.sweeps} sweeps": anneal_case(args.shots, args.sweeps),
        f"qaoa 4 layers q={args.qubits}": qaoa_case(args.qubits, 4),
    }
    # compile outside the timed region
    energy_case(4)[0](nb)
    anneal_case(2, 2)[0](nb)
    qaoa_case(3, 1)[0](nb)

    rows = []
    print(f"{'case':<46} {'numba s':>9} {'numpy s':>9} {'speedup':>8}  match")
    for name, (fn, same) in cases.items():
        t_nb, out_nb = _best_of(lambda: fn(nb), args.repeat)
        t_np, out_np = _best_of(lambda: fn(npk), args.repeat)
        match = bool(same(out_nb, out_np))
        rows.append({"case": name, "numba_s": t_nb, "numpy_s": t_np, "speedup": t_np / t_nb, "match": match})
        print(f"{name:<46} {t_nb:9.4f} {t_np:9.4f} {t_np / t_nb:7.1f}x  {'yes' if match else 'NO'}")

    if args.json:
        meta = {"python": platform.python_version(), "numpy": np.__version__, "repeat": args.repeat}
        with open(args.json, "w") as fh:
            json.dump({"meta": meta, "results": rows}, fh, indent=1)
    return 0 if all(r["match"] for r in rows) else 1


if __name__ == "__main__":
    raise SystemExit(main())
