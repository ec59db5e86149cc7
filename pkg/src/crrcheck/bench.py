"""BMC baseline, range-size estimation and the PQE-versus-QE experiment harness."""

from __future__ import annotations

import csv
import io
import json
import random
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .aiger import Aig, AigBuilder
from .checker import COUNTEREXAMPLE, HOLDS_BOUNDED, RESOURCE_OUT, CheckConfig, Verdict, mc_crr
from .cnf import Clause, CnfFormula, Role, make_clause
from .model import (CounterSpec, ModelError, Trace, TransitionSystem, Unrolling,
                    abstract_counter, from_aig, load_aiger)
from .pqe import PqeProblem, expand_clause, qe, take_out
from .sat import Budget, ResourceOut, Solver, is_implied

CSV_HEADER = ["model", "x_inputs", "latches", "gates", "pqe_s", "qe_s", "h_empty",
              "h_implied", "log2_range_lb"]


# --------------------------------------------------------------------------
# bounded model checking


def bmc(ts: TransitionSystem, n: int, budget: Budget | None = None) -> Verdict:
    """Depth-by-depth satisfiability of I & T_0 & ... & T_{i-1} & not-P_i."""
    if n < 1:
        raise ValueError("bound n must be at least 1")
    u = Unrolling(ts)
    s = Solver(budget=budget)
    s.add_clauses(u.at(ts.I, 0))
    for i in range(1, n + 1):
        s.add_clauses(u.unroll(i - 1))
        sel = ts.pool.new(Role.AUX, "bad")
        for c in u.at(ts.not_P, i):
            s.add_clause(c + (-sel,))
        for j in range(i + 1):
            for v in u.state_vars(j) + u.input_vars(j):
                s.ensure_var(v)
        try:
            r = s.solve([sel])
        except ResourceOut as e:
            return Verdict(RESOURCE_OUT, n, reason=str(e))
        s.add_clause((-sel,))
        if r.sat:
            states = [tuple(r.model[v] for v in u.state_vars(j)) for j in range(i + 1)]
            inputs = [tuple(r.model[v] for v in u.input_vars(j)) for j in range(i + 1)]
            return Verdict(COUNTEREXAMPLE, n, Trace(states, inputs))
    return Verdict(HOLDS_BOUNDED, n)


# --------------------------------------------------------------------------
# clause generation and range estimation


def random_input_clause(ts: TransitionSystem, fraction: float, seed: int) -> Clause:
    """A clause over round(fraction * |S|) distinct state variables."""
    if not 0 < fraction <= 1:
        raise ValueError("fraction must lie in (0, 1]")
    rng = random.Random(seed)
    m = max(1, round(fraction * len(ts.latches)))
    vs = rng.sample(ts.latches, m)
    return make_clause(v if rng.random() < 0.5 else -v for v in vs)


def estimate_range_size(G: CnfFormula, free: Iterable[int], budget: Budget | None = None,
                        max_cubes: int = 8) -> int | None:
    """Lower bound on log2 of the number of free assignments extendable to
    a model of G; None if there is none.

    The range is first computed by quantifier elimination; each enumerated
    range point is grown into a cube by dropping literals (highest variable
    first) while every clause of the range formula still meets the cube.
    """
    free = sorted(set(free))
    W = G.variables() - set(free)
    R = qe(G, W, budget=budget, free=free)
    s = Solver(R, budget=budget)
    for v in free:
        s.ensure_var(v)
    clauses = [set(c) for c in R]
    best = None
    for _ in range(max_cubes):
        r = s.solve()
        if not r.sat:
            break
        cube = set(r.project(free))
        for lit in sorted(cube, key=abs, reverse=True):
            trial = cube - {lit}
            if all(c & trial for c in clauses):
                cube = trial
        best = max(best or 0, len(free) - len(cube))
        if not cube:
            break
        s.add_clause([-l for l in cube])
    return best


# --------------------------------------------------------------------------
# random AIGER systems


def random_aig(seed: int, latches: int = 4, inputs: int = 2, ands: int = 10) -> Aig:
    rng = random.Random(seed)
    b = AigBuilder()
    xs = [b.input(f"x{i}") for i in range(inputs)]
    ss = [b.latch(f"s{i}") for i in range(latches)]
    pool = xs + ss
    tries = 0
    while len(b.aig.ands) < ands and tries < 50 * ands:
        tries += 1
        a, c = rng.sample(pool, 2)
        g = b.and_(a ^ rng.getrandbits(1), c ^ rng.getrandbits(1))
        if g > 1 and g not in pool:
            pool.append(g)
    for s in ss:
        b.set_next(s, rng.choice(pool[inputs:]) ^ rng.getrandbits(1))
    k = rng.randint(2, min(3, latches))
    picked = rng.sample(ss, k)
    bad = 1
    for i, s in enumerate(picked):
        # the first literal is positive so the all-zero reset state is good
        bad = b.and_(bad, s if i == 0 else s ^ rng.getrandbits(1))
    aig = b.finish(bad)
    aig.comments = [f"random seed {seed}"]
    return aig


def random_system(seed: int, **kw) -> TransitionSystem:
    return from_aig(random_aig(seed, **kw), f"random_{seed}")


# --------------------------------------------------------------------------
# verdict grid


@dataclass
class GridCell:
    k: int
    d: int
    n: int
    encoding: str
    crr: str
    bmc: str
    crr_length: int | None = None
    bmc_length: int | None = None

    @property
    def agree(self) -> bool:
        return (self.crr == COUNTEREXAMPLE) == (self.bmc == COUNTEREXAMPLE)


def counter_grid(ks: Sequence[int] = (2, 3), ns: Sequence[int] = range(1, 9),
                 perm_seed: int = 7, cfg: CheckConfig | None = None) -> list[GridCell]:
    cells = []
    for k in ks:
        for seed in (None, perm_seed):
            for d in range(1, 2 ** k - 1):
                ts = abstract_counter(CounterSpec(k, d, seed))
                for n in ns:
                    v = mc_crr(ts, n, cfg)
                    w = bmc(ts, n)
                    cells.append(GridCell(k, d, n, "standard" if seed is None else "permuted",
                                          v.kind, w.kind,
                                          v.trace.length if v.fails else None,
                                          w.trace.length if w.fails else None))
    return cells


# --------------------------------------------------------------------------
# experiment harness


@dataclass
class ExperimentConfig:
    fraction: float = 0.7
    max_queries: int = 128
    wall_secs: float = 10.0
    conflicts: int = 100_000
    max_cubes: int = 8

    def budget(self) -> Budget:
        return Budget.with_wall(self.wall_secs, conflicts_per_call=self.conflicts,
                                max_queries=self.max_queries)


@dataclass
class ExperimentRow:
    model: str
    x_inputs: int
    latches: int
    gates: int
    pqe_s: float | str
    qe_s: float | str
    h_empty: bool | str
    h_implied: bool | str
    log2_range_lb: int | str
    raw_pqe_s: float | str = ""
    excluded_image_qe_s: float | str = ""

    def csv_row(self) -> list:
        def fmt(x):
            if isinstance(x, bool):
                return "1" if x else "0"
            if isinstance(x, float):
                return f"{x:.4f}"
            return "" if x is None else str(x)
        return [fmt(getattr(self, c)) for c in CSV_HEADER]


def _timed(fn):
    t0 = time.perf_counter()
    try:
        out = fn()
    except ResourceOut:
        return "timeout", None
    except Exception:  # a broken row must not abort the run
        return "error", None
    return time.perf_counter() - t0, out


def experiment_row(ts: TransitionSystem, seed: int, cfg: ExperimentConfig) -> ExperimentRow:
    pool = ts.pool
    C = random_input_clause(ts, cfg.fraction, seed)
    W = set(ts.latches) | set(ts.inputs) | set(ts.internals)
    free = set(ts.next_vars)
    T = ts.T

    def problem(clause):
        return PqeProblem(CnfFormula(pool, [clause]), T, W, free)

    raw_s, _ = _timed(lambda: take_out(problem(C), budget=cfg.budget()))

    def method2():
        b = cfg.budget()
        C2 = expand_clause(C, T, candidates=set(ts.latches) | set(ts.inputs), budget=b)
        return take_out(problem(C2), budget=b)
    pqe_s, sol = _timed(method2)
    qe_s, _ = _timed(lambda: qe(T, W, budget=cfg.budget(), free=free))

    h_empty: bool | str = ""
    h_implied: bool | str = ""
    if sol is not None:
        h_empty = sol.H.is_empty()
        h_implied = all(is_implied(T, c) for c in sol.H) if sol.H else False
    notC = CnfFormula(pool, [(-l,) for l in C])
    img_s, lb = _timed(lambda: estimate_range_size(T & notC, free, budget=cfg.budget(),
                                                   max_cubes=cfg.max_cubes))
    return ExperimentRow(ts.name, len(ts.inputs), len(ts.latches), ts.gate_count,
                         pqe_s, qe_s, h_empty, h_implied, "" if lb is None else lb,
                         raw_s, img_s)


def read_manifest(path: str | Path) -> list[tuple[Path, list[int]]]:
    """Lines ``<model path> [seed ...]``; paths are relative to the manifest."""
    path = Path(path)
    out = []
    for line in path.read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        seeds = [int(x) for x in parts[1:]] or [0]
        out.append((path.parent / parts[0], seeds))
    return out


def run_experiment(models: Sequence[tuple[Path | str | TransitionSystem, Sequence[int]]],
                   cfg: ExperimentConfig | None = None) -> tuple[list[ExperimentRow], dict]:
    cfg = cfg or ExperimentConfig()
    rows: list[ExperimentRow] = []
    for model, seeds in models:
        ts = model
        name = model.name if isinstance(model, TransitionSystem) else Path(model).stem
        if not isinstance(model, TransitionSystem):
            try:
                ts = load_aiger(model)
            except (OSError, ModelError) as e:
                for _ in seeds:
                    rows.append(ExperimentRow(name, "", "", "", "error", "error", "", "", ""))
                continue
        for seed in seeds:
            rows.append(experiment_row(ts, seed, cfg))
    return rows, summarize(rows, cfg)


def _ok(x) -> bool:
    return isinstance(x, float)


def summarize(rows: Sequence[ExperimentRow], cfg: ExperimentConfig) -> dict:
    return {
        "rows": len(rows),
        "solved": {
            "pqe_raw": sum(_ok(r.raw_pqe_s) for r in rows),
            "pqe_expanded": sum(_ok(r.pqe_s) for r in rows),
            "qe_full_range": sum(_ok(r.qe_s) for r in rows),
            "qe_excluded_image": sum(_ok(r.excluded_image_qe_s) for r in rows),
        },
        "h_empty": sum(r.h_empty is True for r in rows),
        "h_implied": sum(r.h_implied is True for r in rows),
        "budget": {"max_queries": cfg.max_queries, "wall_secs": cfg.wall_secs,
                   "conflicts_per_call": cfg.conflicts},
    }


def write_csv(rows: Sequence[ExperimentRow], fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow(r.csv_row())


def csv_text(rows: Sequence[ExperimentRow]) -> str:
    buf = io.StringIO()
    write_csv(rows, buf)
    return buf.getvalue()


def summary_json(summary: dict) -> str:
    return json.dumps(summary, indent=2, sort_keys=True)
