"""Bounded safety checking by computing range reduction with partial
quantifier elimination."""

from .bench import bmc, estimate_range_size, random_input_clause, run_experiment
from .checker import (CheckConfig, InputPair, RangeReductionState, Verdict, comp_rr_form,
                      constr_time_frame, gen_excluding_clause, mc_crr, pick_input_pair)
from .cnf import (CnfFormula, Role, VariablePool, evaluate, negate_to_cnf, rename_frame,
                  tseitin_encode)
from .model import (CounterSpec, Trace, TransitionSystem, Unrolling, abstract_counter,
                    build_phi, parse_aiger)
from .pqe import (PqeProblem, PqeSolution, brute_force_pqe, expand_clause,
                  is_noise_free_clause, qe, take_out)
from .sat import Budget, ResourceOut, Solver, is_implied, solve

__all__ = [name for name in dir() if not name.startswith("_")]
