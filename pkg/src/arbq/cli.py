"""Command-line pipeline: load rates, formulate, solve, decode, report.

Exit codes: 0 success (including "no optimal arbitrage path"), 2 bad
configuration or unreadable table, 3 problem too large for the chosen
backend, 4 the solver returned only infeasible selections.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass
from pathlib import Path

from . import anneal, decode, market, ncomp, qaoa, qubo

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CAPACITY = 3
EXIT_INFEASIBLE = 4

NO_PATH = "no optimal arbitrage path"


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    table: market.RateTable
    source: str
    formulation: str = "qubo"
    method: str = "exact"
    m_p: float | str = "auto"
    soft_scale: int = ncomp.DEFAULT_SOFT_SCALE
    shots: int = 1000
    sweeps: int = 1000
    layers: int = 4
    maxiter: int = 100
    seed: int = 0
    qubit_limit: int = qaoa.QUBIT_LIMIT

    def echo(self) -> dict:
        return {
            "source": self.source,
            "formulation": self.formulation,
            "method": self.method,
            "mp": self.m_p,
            "soft_scale": self.soft_scale,
            "shots": self.shots,
            "sweeps": self.sweeps,
            "layers": self.layers,
            "maxiter": self.maxiter,
            "seed": self.seed,
        }


def formulate(cfg: RunConfig):
    """Return ``(qubo, feasibility predicate, resolved parameters)``."""
    if cfg.formulation == "qubo":
        q, m_p = qubo.build_objective(cfg.table, cfg.m_p)

        def feasible(bits, rep):
            return rep.feasible

        return q, feasible, {"m_p": m_p}
    if cfg.formulation == "nck":
        program = ncomp.build_arbitrage_program(cfg.table, cfg.soft_scale)
        hw = ncomp.default_hard_weight(program)
        q = ncomp.compile_to_qubo(program, hw)

        def feasible(bits, rep):
            return ncomp.check(program, bits).hard_satisfied

        return q, feasible, {"hard_weight": hw, "soft_scale": cfg.soft_scale}
    raise ConfigError(f"unknown formulation {cfg.formulation!r}")


def run_solver(q: qubo.Qubo, cfg: RunConfig, seed: int | None = None) -> tuple[anneal.SampleSet, dict]:
    seed = cfg.seed if seed is None else seed
    if cfg.method == "exact":
        return anneal.solve_exact(q), {}
    if cfg.method == "sa":
        sc = anneal.SamplerConfig(shots=cfg.shots, sweeps_per_shot=cfg.sweeps, seed=seed)
        return anneal.solve_sa(q, sc), {}
    if cfg.method == "qaoa":
        if q.num_variables > cfg.qubit_limit:
            raise anneal.CapacityError(
                f"{q.num_variables} qubits exceeds the statevector limit of {cfg.qubit_limit}"
            )
        res = qaoa.optimize(q, cfg.layers, maxiter=cfg.maxiter, seed=seed, limit=cfg.qubit_limit)
        samples = qaoa.sample(q, res.params, shots=cfg.shots, seed=seed, limit=cfg.qubit_limit)
        extra = {
            "qaoa": {
                "gammas": list(res.params.gammas),
                "betas": list(res.params.betas),
                "objective": res.objective,
                "evaluations": len(res.trace),
                "converged": res.converged,
            }
        }
        return samples, extra
    raise ConfigError(f"unknown method {cfg.method!r}")


def pick_result(samples: anneal.SampleSet, cfg: RunConfig, feasible) -> tuple[decode.CycleReport | None, dict]:
    """Best decode among the lowest-energy feasible records.

    Degenerate minimum-energy records are all decoded and the one with the
    most profitable cycle wins.
    """
    index = qubo.EdgeVarIndex(cfg.table.codes)
    decoded = []
    feasible_shots = 0
    for r in samples.records:
        rep = decode.decode_bits(r.bits, cfg.table, index)
        rep.energy, rep.frequency = r.energy, r.frequency
        ok = feasible(r.bits, rep)
        if ok:
            feasible_shots += r.frequency
            decoded.append(rep)
    stats = {
        "records": len(samples.records),
        "shots": samples.num_shots,
        "feasible_shots": feasible_shots,
    }
    if not decoded:
        return None, stats
    e0 = min(r.energy for r in decoded)
    tier = [r for r in decoded if r.energy <= e0 + qubo.ENERGY_TOL]
    stats["min_energy"] = e0
    stats["min_energy_shots"] = sum(r.frequency for r in tier)

    def rank(rep):
        best = rep.best
        return (-(best.profit if best else 1.0), best.codes if best else (), rep.bits)

    return min(tier, key=rank), stats


def _table_from_args(args) -> tuple[market.RateTable, str]:
    if args.fixture:
        return market.fixture(args.fixture), f"fixture:{args.fixture}"
    return market.load_rate_table(args.table), str(args.table)


def _config_from_args(args) -> RunConfig:
    table, source = _table_from_args(args)
    mp = args.mp
    if mp != "auto":
        try:
            mp = float(mp)
        except ValueError:
            raise ConfigError(f"--mp must be 'auto' or a number, got {mp!r}") from None
    return RunConfig(
        table=table,
        source=source,
        formulation=args.formulation,
        method=args.method,
        m_p=mp,
        soft_scale=args.soft_scale,
        shots=args.shots,
        sweeps=args.sweeps,
        layers=args.layers,
        maxiter=args.maxiter,
        seed=args.seed,
        qubit_limit=args.qubit_limit,
    )


def _write(path: str | None, text: str) -> None:
    if path:
        Path(path).write_text(text, encoding="utf-8")


def cmd_solve(args) -> int:
    cfg = _config_from_args(args)
    q, feasible, resolved = formulate(cfg)
    samples, extra = run_solver(q, cfg)
    chosen, stats = pick_result(samples, cfg, feasible)
    report = {"config": cfg.echo(), "resolved": resolved, "codes": list(cfg.table.codes), "stats": stats, **extra}
    if chosen is None:
        report.update({"result": None, "path": None, "profit": None, "arbitrage": False})
        line = "no feasible cycle decoded from solver output"
        status = EXIT_INFEASIBLE
    else:
        best = chosen.best
        arbitrage = best is not None and best.profitable
        report.update(
            {
                "result": chosen.to_dict(),
                "path": best.path() if best else None,
                "profit": best.profit if best else None,
                "arbitrage": arbitrage,
            }
        )
        line = f"{best.path()}  profit {best.profit!r}" if arbitrage else NO_PATH
        status = EXIT_OK
    text = json.dumps(report, indent=1, ensure_ascii=False) + "\n"
    _write(args.out, text)
    if args.out:
        _write(str(Path(args.out).with_suffix(".txt")), _summary(cfg, resolved, stats, line))
    print(line)
    return status


def _summary(cfg: RunConfig, resolved: dict, stats: dict, line: str) -> str:
    parts = [f"table: {cfg.source} ({', '.join(cfg.table.codes)})", f"formulation: {cfg.formulation}", f"method: {cfg.method}"]
    parts += [f"{k}: {v!r}" for k, v in resolved.items()]
    parts += [f"{k}: {v!r}" for k, v in stats.items()]
    parts.append(line)
    return "\n".join(parts) + "\n"


def _parse_grid(text: str) -> list[float]:
    try:
        grid = [float(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise ConfigError(f"bad --mp-grid {text!r}") from None
    if not grid:
        raise ConfigError("--mp-grid must list at least one value")
    return grid


def cmd_sweep(args) -> int:
    cfg = _config_from_args(args)
    if cfg.formulation != "qubo":
        raise ConfigError("penalty sweeps apply to the qubo formulation")
    if cfg.method == "qaoa":
        raise ConfigError("penalty sweeps support the exact and sa methods")
    grid = _parse_grid(args.mp_grid)
    graph = market.to_graph(cfg.table)
    cost = qubo.build_cost(graph)
    penalty = qubo.build_constraints(cost.var_index)
    if cfg.method == "exact" and cost.num_variables > anneal.EXACT_LIMIT:
        raise anneal.CapacityError(f"exact enumeration limited to {anneal.EXACT_LIMIT} variables")

    def solver(qq):
        return run_solver(qq, cfg)[0]

    points, recommended = qubo.sweep_penalty(cost, penalty, grid, solver, cfg.table)
    oracle = decode.best_cycle_oracle(cfg.table)[0] if cfg.table.n <= decode.ORACLE_MAX_N else None
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["m_p", "feasible_fraction", "best_profit", "matches_oracle"])
    for pt in points:
        match = oracle is not None and pt.best_feasible and pt.best_cycle == oracle.codes
        w.writerow([repr(pt.m_p), repr(pt.feasible_fraction), "" if pt.best_profit is None else repr(pt.best_profit), int(match)])
    text = out.getvalue()
    if args.out:
        _write(args.out, text)
    else:
        sys.stdout.write(text)
    print(f"recommended m_p: {recommended!r}", file=sys.stderr if not args.out else sys.stdout)
    return EXIT_OK


def cmd_degeneracy(args) -> int:
    cfg = _config_from_args(args)
    if args.repeats < 1:
        raise ConfigError("--repeats must be >= 1")
    q, _, _ = formulate(cfg)
    index = qubo.EdgeVarIndex(cfg.table.codes)
    for k in range(args.repeats):
        seed = cfg.seed + k
        samples, _ = run_solver(q, cfg, seed=seed)
        hist = decode.degeneracy_histogram(samples, cfg.table, index)
        text = hist.to_csv()
        if args.hist_out:
            path = Path(args.hist_out)
            if args.repeats > 1:
                path = path.with_name(f"{path.stem}.seed{seed}{path.suffix}")
            _write(str(path), text)
        elif args.repeats == 1:
            sys.stdout.write(text)
        prefix = f"seed {seed}: " if args.repeats > 1 else ""
        print(prefix + hist.summary())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="arbq", description="Currency-arbitrage cycle search on QUBO backends")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    src = common.add_mutually_exclusive_group(required=True)
    src.add_argument("--table", help="rate table file (.csv or .json)")
    src.add_argument("--fixture", choices=sorted(market.FIXTURES), help="built-in rate table")
    common.add_argument("--formulation", choices=("qubo", "nck"), default="qubo")
    common.add_argument("--method", choices=("exact", "sa", "qaoa"), default="exact")
    common.add_argument("--mp", default="auto", help="penalty weight for the qubo formulation, or 'auto'")
    common.add_argument("--soft-scale", type=int, default=ncomp.DEFAULT_SOFT_SCALE)
    common.add_argument("--shots", type=int, default=1000)
    common.add_argument("--sweeps", type=int, default=1000, help="SA sweeps per shot")
    common.add_argument("--layers", type=int, default=4, help="QAOA layers")
    common.add_argument("--maxiter", type=int, default=100, help="QAOA optimiser evaluation budget")
    common.add_argument("--qubit-limit", type=int, default=qaoa.QUBIT_LIMIT)
    common.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("solve", parents=[common], help="find the most profitable cycle")
    p.add_argument("--out", help="write the JSON report here (summary goes next to it as .txt)")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", parents=[common], help="sweep the penalty weight")
    p.add_argument("--mp-grid", required=True, help="comma-separated penalty weights")
    p.add_argument("--out", help="CSV output path (default stdout)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("degeneracy", parents=[common], help="profit histogram of minimum-energy samples")
    p.add_argument("--hist-out", help="CSV output path (default stdout)")
    p.add_argument("--repeats", type=int, default=1, help="independent runs with seeds seed, seed+1, ...")
    p.set_defaults(func=cmd_degeneracy)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, market.RateTableError, KeyError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except anneal.CapacityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY


if __name__ == "__main__":
    sys.exit(main())
