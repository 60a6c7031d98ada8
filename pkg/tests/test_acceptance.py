"""End-to-end acceptance checks, one test per criterion.

Each check records a ``[criterion N] PASS|FAIL ...`` line; the lines are
printed together in the terminal summary at the end of the run.  Run
``pytest tests/test_acceptance.py -v`` or ``python tests/test_acceptance.py``.
"""

import math
import sys
import time

import numpy as np
import pytest

from arbq import cli, qaoa
from arbq.anneal import SamplerConfig, solve_exact, solve_sa
from arbq.decode import Cycle, best_cycle_oracle, canonical_rotation, profit_of_cycle, decode_bits, degeneracy_histogram
from arbq.market import bellman_ford_negative_cycle, fixture, to_graph
from arbq.ncomp import build_arbitrage_program, compile_to_qubo
from arbq.qubo import EdgeVarIndex, build_objective, energy, to_ising

from conftest import ACCEPTANCE_LINES, all_bits, random_table


def report(n, ok, detail):
    line = f"[criterion {n}] {'PASS' if ok else 'FAIL'} {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, detail


class timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.seconds = time.perf_counter() - self.t0


TABLE1_CYCLE = canonical_rotation(("EUR", "JPY", "USD", "CHF"))
TABLE1_PROFIT = 1.002424106050562


def test_criterion_01_oracle_table1():
    with timer() as t:
        best, arb = best_cycle_oracle(fixture("table4"))
    ok = best.codes == TABLE1_CYCLE and abs(best.profit - TABLE1_PROFIT) <= 1e-6 and arb and t.seconds < 1
    report(1, ok, f"{best.path()} profit {best.profit!r} in {t.seconds:.3f}s")


def test_criterion_02_qubo_minimum_table1():
    t4 = fixture("table4")
    with timer() as t:
        q, m_p = build_objective(t4)
        ss = solve_exact(q, levels=0)
        reps = [decode_bits(r.bits, t4, q.var_index) for r in ss.records]
    codes = {rep.best.codes if rep.best else None for rep in reps}
    ok = all(rep.feasible and len(rep.cycles) == 1 for rep in reps) and codes == {TABLE1_CYCLE} and t.seconds < 5
    report(2, ok, f"m_p={m_p:.6f}, {len(reps)} minimiser(s) at {ss.first.energy:.10f} decode to {' / '.join(' → '.join(c) for c in codes if c)} in {t.seconds:.2f}s")


REFERENCE_TABLE2 = (1.002309461549003, ("USD", "EUR", "AUD", "JPY", "GBP"))
REFERENCE_TABLE3 = (1.0039286603299495, ("USD", "EUR", "AUD", "CAD", "JPY", "GBP"))


def test_criterion_03a_oracle_profits_tables2_3():
    with timer() as t:
        b2, _ = best_cycle_oracle(fixture("table5"))
        b3, _ = best_cycle_oracle(fixture("table6"))
    d2, d3 = abs(b2.profit - REFERENCE_TABLE2[0]), abs(b3.profit - REFERENCE_TABLE3[0])
    ok = d2 <= 1e-2 and d3 <= 1e-2 and t.seconds < 5
    report("3a", ok, f"profits {b2.profit:.10f} (|d|={d2:.2e}), {b3.profit:.10f} (|d|={d3:.2e}) in {t.seconds:.2f}s")


def test_criterion_03b_oracle_cycles_tables2_3():
    b2, _ = best_cycle_oracle(fixture("table5"))
    b3, _ = best_cycle_oracle(fixture("table6"))
    want2, want3 = canonical_rotation(REFERENCE_TABLE2[1]), canonical_rotation(REFERENCE_TABLE3[1])
    ok = b2.codes == want2 and b3.codes == want3
    exp2 = Cycle(want2, profit_of_cycle(want2, fixture("table5")))
    exp3 = Cycle(want3, profit_of_cycle(want3, fixture("table6")))
    report(
        "3b",
        ok,
        f"oracle cycles {b2.path()} ({b2.profit:.10f}) and {b3.path()} ({b3.profit:.10f}); "
        f"expected {exp2.path()} ({exp2.profit:.10f}) and {exp3.path()} ({exp3.profit:.10f})",
    )


def _count_feasible(table):
    prog = build_arbitrage_program(table)
    X = all_bits(len(prog.variables)).astype(np.int8)
    ok = np.ones(X.shape[0], dtype=bool)
    for c in prog.hard:
        cols = [prog.variables[v] for v in c.vars]
        ok &= np.isin(X[:, cols].sum(axis=1), sorted(c.select))
    return int(ok.sum())


def test_criterion_04_nck_feasible_counts():
    with timer() as t:
        c4 = _count_feasible(fixture("table4"))
        c5 = _count_feasible(fixture("table5"))
    report(4, c4 == 9 and c5 == 44 and t.seconds < 60, f"feasible assignments {c4}/4096 and {c5}/1048576 in {t.seconds:.2f}s")


def test_criterion_05_nck_soft_ordering():
    t4 = fixture("table4")
    prog = build_arbitrage_program(t4)
    q = compile_to_qubo(prog)
    X = all_bits(12)
    E = np.array([energy(q, x) for x in X])
    feasible = np.array([all(sum(x[prog.variables[v]] for v in c.vars) in c.select for c in prog.hard) for x in X])
    e_min = E[feasible].min()
    tier = [X[k] for k in np.flatnonzero(feasible & (E <= e_min + 1e-9))]
    reps = [decode_bits(x, t4, prog.var_index) for x in tier]
    pick = min(reps, key=lambda r: (-r.best.profit, r.best.codes))
    ok = pick.best.codes == TABLE1_CYCLE and any(r.best.codes == TABLE1_CYCLE for r in reps)
    report(5, ok, f"{len(tier)} feasible minimiser(s) at {e_min:g}; best decode {pick.best.path()}")


def _best_feasible_profit(ss, table, index):
    best = None
    for r in ss.records:
        rep = decode_bits(r.bits, table, index)
        if rep.feasible and rep.best is not None:
            best = max(best or 0.0, rep.best.profit)
    return best


@pytest.mark.slow
def test_criterion_06_sa_reliability():
    t4, t6 = fixture("table4"), fixture("table6")
    with timer() as t:
        q4, _ = build_objective(t4)
        e0 = solve_exact(q4, levels=0).first.energy
        hits = sum(abs(solve_sa(q4, SamplerConfig(seed=s)).first.energy - e0) <= 1e-9 for s in range(100))
        q6, _ = build_objective(t6)
        profits = [_best_feasible_profit(solve_sa(q6, SamplerConfig(seed=s)), t6, q6.var_index) for s in range(6)]
    wins = sum(p is not None and p > 1 for p in profits)
    ok = hits >= 95 and wins >= 4 and t.seconds < 300
    report(6, ok, f"table1 exact minimum in {hits}/100 seeds; table3 profitable in {wins}/6 runs; {t.seconds:.1f}s")


def _ising_gap(q, X):
    z = to_ising(q)
    S = 1 - 2 * X
    e_is = np.full(X.shape[0], z.offset)
    for v, h in z.h.items():
        e_is += h * S[:, v]
    for (u, v), c in z.J.items():
        e_is += c * S[:, u] * S[:, v]
    e_q = np.full(X.shape[0], q.offset)
    for v, c in q.linear.items():
        e_q += c * X[:, v]
    for (u, v), c in q.quadratic.items():
        e_q += c * X[:, u] * X[:, v]
    return float(np.max(np.abs(e_is - e_q)))


def test_criterion_07_qubo_ising_identity():
    rng = np.random.default_rng(0)
    gaps = [_ising_gap(build_objective(fixture("table4"))[0], all_bits(12))]
    for name in ("table5", "table6"):
        q = build_objective(fixture(name))[0]
        gaps.append(_ising_gap(q, rng.integers(0, 2, (100_000, q.num_variables))))
    report(7, max(gaps) <= 1e-9, "max |E_ising - E_qubo| = " + ", ".join(f"{g:.1e}" for g in gaps))


def test_criterion_08_qaoa_engine():
    t3 = fixture("table4").subset(["EUR", "USD", "JPY"])
    parts = {}
    with timer() as t:
        rng = np.random.default_rng(0)
        worst = 0.0
        for table in (t3, fixture("table4")):
            q = build_objective(table)[0]
            diag = qaoa.ising_diagonal(to_ising(q))
            for _ in range(1000):
                s = qaoa.prepare_uniform(q.num_variables)
                g, b = rng.uniform(0, 2 * math.pi, 2)
                qaoa.apply_cost_layer(s, diag, g)
                worst = max(worst, abs(s.norm() - 1))
                qaoa.apply_mixer_layer(s, b)
                worst = max(worst, abs(s.norm() - 1))
        parts["a"] = worst <= 1e-10

        q4 = build_objective(fixture("table4"))[0]
        mean = float(np.mean([energy(q4, x) for x in all_bits(12)]))
        parts["b"] = abs(qaoa.expectation(q4, qaoa.QaoaParams((), ())) - mean) <= 1e-9

        s = qaoa.prepare_uniform(12)
        qaoa.apply_mixer_layer(s, 0.4)
        before = np.abs(s.amplitudes)
        qaoa.apply_cost_layer(s, to_ising(q4), 1.3)
        parts["c"] = float(np.max(np.abs(np.abs(s.amplitudes) - before))) <= 1e-12

        q3 = build_objective(t3)[0]
        res = qaoa.optimize(q3, p=2, seed=0)
        probs = qaoa.evolve(qaoa.ising_diagonal(to_ising(q3)), res.params).probabilities()
        ground = solve_exact(q3, levels=0).records
        p_ground = sum(probs[int(r.bits[::-1], 2)] for r in ground)
        parts["d"] = p_ground >= 2 / 64

        parts["e"] = qaoa.circuit_metrics(build_objective(fixture("table6"))[0], 4).qubits == 30
    ok = all(parts.values()) and t.seconds < 120
    flags = " ".join(f"{k}={'ok' if v else 'FAIL'}" for k, v in parts.items())
    report(8, ok, f"{flags}; norm drift {worst:.1e}, ground probability {p_ground:.4f} vs uniform {1 / 64:.4f}; {t.seconds:.1f}s")


def test_criterion_09_bellman_ford_agreement():
    rng = np.random.default_rng(2024)
    tables = [fixture(n) for n in ("table4", "table5", "table6")]
    tables += [random_table(rng, int(rng.integers(3, 7))) for _ in range(100)]
    with timer() as t:
        agree = sum(bool(bellman_ford_negative_cycle(to_graph(tb))) == best_cycle_oracle(tb)[1] for tb in tables)
    report(9, agree == len(tables) and t.seconds < 10, f"{agree}/{len(tables)} tables agree in {t.seconds:.2f}s")


def test_criterion_10_degeneracy_contains_optimum():
    t4 = fixture("table4")
    q, _ = build_objective(t4)
    h = degeneracy_histogram(solve_exact(q), t4, q.var_index)
    report(10, h.optimal_bins >= 1, f"{len(h.bins)} bin(s) over {h.shots_at_min} minimum-energy state(s), optimal bins {h.optimal_bins}")


def test_criterion_11_determinism(tmp_path, capsys):
    commands = {
        "solve-sa": ["solve", "--fixture", "table5", "--method", "sa", "--shots", "300", "--sweeps", "300", "--seed", "9"],
        "solve-nck": ["solve", "--fixture", "table4", "--formulation", "nck", "--method", "sa", "--seed", "2"],
        "solve-qaoa": ["solve", "--fixture", "table4", "--method", "qaoa", "--layers", "2", "--maxiter", "30"],
        "sweep": ["sweep", "--fixture", "table4", "--method", "sa", "--mp-grid", "0,5,20", "--shots", "200"],
        "degeneracy": ["degeneracy", "--fixture", "table4", "--method", "sa", "--shots", "500"],
    }
    same = {}
    for name, argv in commands.items():
        blobs = []
        for k in range(2):
            flag = "--hist-out" if argv[0] == "degeneracy" else "--out"
            out = tmp_path / f"{name}-{k}.{'json' if argv[0] == 'solve' else 'csv'}"
            cli.main(argv + [flag, str(out)])
            files = [out] + ([out.with_suffix(".txt")] if argv[0] == "solve" else [])
            blobs.append(b"".join(f.read_bytes() for f in files))
        same[name] = blobs[0] == blobs[1]
    capsys.readouterr()
    report(11, all(same.values()), ", ".join(f"{k}={'identical' if v else 'DIFFERENT'}" for k, v in same.items()))


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
