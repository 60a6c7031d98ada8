"""Currency-arbitrage cycle search on QUBO, NchooseK, annealing and QAOA backends."""

from .market import RateTable, fixture, parse_rate_table, to_graph, bellman_ford_negative_cycle
from .qubo import EdgeVarIndex, Qubo, build_objective, energy, to_ising
from .ncomp import build_arbitrage_program, compile_to_qubo, check
from .anneal import SamplerConfig, SampleSet, solve_exact, solve_sa
from .decode import best_cycle_oracle, decode_bits, profit_of_cycle, degeneracy_histogram

__version__ = "0.1.0"
