"""Partial quantifier elimination.

``take_out`` finds H over the free variables with H & Exists W[G] equal to
Exists W[F & G].  The engine enumerates points z of the range of G & not-F.
For each such z it asks whether F & G still admits z: if not, the failed
assumptions give a clause over free variables that goes into H; otherwise z
is blocked.  Generalised clauses may reach points outside the range of G,
which is the permitted noise.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .cnf import (Clause, CnfError, CnfFormula, Role, VariablePool, make_clause,
                  negate_cube, negate_to_cnf, read_dimacs, write_dimacs)
from .sat import Budget, ResourceOut, SolveStats, Solver


@dataclass
class PqeProblem:
    F: CnfFormula
    G: CnfFormula
    W: frozenset
    free: frozenset

    def __post_init__(self) -> None:
        self.W = frozenset(self.W)
        self.free = frozenset(self.free)
        if self.W & self.free:
            raise CnfError("quantified and free variables overlap")
        stray = (self.F.variables() | self.G.variables()) - self.W - self.free
        if stray:
            raise CnfError(f"variables {sorted(stray)[:5]} are neither quantified nor free")

    @property
    def pool(self) -> VariablePool:
        return self.G.pool


@dataclass
class PqeSolution:
    H: CnfFormula
    noisy: bool = True       # False only when H is known to be noise-free
    complete: bool = True    # False for a partial result cut off by a budget
    queries: int = 0
    generalizations: int = 0


@dataclass
class PqeStats:
    calls: int = 0
    clauses: int = 0
    sat: SolveStats = field(default_factory=SolveStats)


class PqeEngine:
    """Two incremental solvers shared by a sequence of take-out calls.

    Clauses added with :meth:`add` form a context common to every later
    call; per-call formulas are switched on by fresh selector variables and
    retired afterwards.
    """

    def __init__(self, pool: VariablePool, budget: Budget | None = None, seed: int = 0,
                 minimize: bool = True, stats: PqeStats | None = None) -> None:
        self.pool = pool
        self.budget = budget
        self.minimize = minimize
        self.stats = stats if stats is not None else PqeStats()
        self.q1 = Solver(seed=seed, budget=budget, stats=self.stats.sat)
        self.q2 = Solver(seed=seed, budget=budget, stats=self.stats.sat)

    def add(self, clauses: Iterable[Sequence[int]]) -> None:
        for c in clauses:
            self.q1.add_clause(c)
            self.q2.add_clause(c)

    def _core(self, sel: int, cube: list[int], failed: list[int]) -> list[int]:
        core = [l for l in cube if l in set(failed)]
        if not self.minimize:
            return core
        i = 0
        while i < len(core):
            trial = core[:i] + core[i + 1:]
            r = self.q2.solve([sel] + trial)
            if not r.sat:
                keep = set(r.failed_assumptions)
                core = [l for l in trial if l in keep]
            else:
                i += 1
        return core

    def take_out(self, F: CnfFormula, free: Iterable[int], phase: str = "pqe") -> PqeSolution:
        free = sorted(set(free))
        pool = self.pool
        self.stats.calls += 1
        sel1 = pool.new(Role.AUX, "sel")
        sel2 = pool.new(Role.AUX, "sel")
        for c in negate_to_cnf(F):
            self.q1.add_clause(c + (-sel1,))
        for c in F:
            self.q2.add_clause(c + (-sel2,))
        if free:
            self.q1.ensure_var(free[-1])
        H = CnfFormula(pool)
        sol = PqeSolution(H)
        try:
            while True:
                sol.queries += 1
                r = self.q1.solve([sel1])
                if not r.sat:
                    break
                z = r.project(free)
                sol.queries += 1
                r2 = self.q2.solve([sel2] + z)
                if r2.sat:
                    self.q1.add_clause(negate_cube(z) + (-sel1,))
                    continue
                core = self._core(sel2, z, r2.failed_assumptions)
                clause = negate_cube(core)
                if len(core) < len(z):
                    sol.generalizations += 1
                H.add(clause)
                self.stats.clauses += 1
                self.q1.add_clause(clause + (-sel1,))
        except ResourceOut as e:
            sol.complete = False
            raise ResourceOut(phase, e.budget, partial=sol) from None
        finally:
            self.q1.add_clause((-sel1,))
            self.q2.add_clause((-sel2,))
        sol.noisy = bool(H)
        return sol


def take_out(p: PqeProblem, budget: Budget | None = None, seed: int = 0,
             minimize: bool = True) -> PqeSolution:
    eng = PqeEngine(p.pool, budget=budget, seed=seed, minimize=minimize)
    eng.add(p.G)
    return eng.take_out(p.F, p.free)


def qe(G: CnfFormula, W: Iterable[int], budget: Budget | None = None,
       free: Iterable[int] | None = None) -> CnfFormula:
    """Quantifier-free R over the free variables with R equal to Exists W[G]."""
    W = set(W)
    if free is None:
        free = G.variables() - W
    eng = PqeEngine(G.pool, budget=budget)
    return eng.take_out(G, free, phase="qe").H


# --------------------------------------------------------------------------
# clause expansion and noise certification


def expand_clause(C: Clause, T: CnfFormula, candidates: Iterable[int] | None = None,
                  budget: Budget | None = None) -> Clause:
    """Grow C by literals l with T implying C or not-l, to a fixpoint.

    Candidates are tried in ascending variable order, positive literal first.
    """
    C = make_clause(C)
    if candidates is None:
        candidates = T.variables()
    cands = sorted(set(candidates) - {abs(l) for l in C})
    if not cands:
        return C
    s = Solver(T, budget=budget)
    lits = set(C)
    changed = True
    while changed:
        changed = False
        for v in cands:
            if v in lits or -v in lits:
                continue
            base = [-l for l in lits]
            for lit in (v, -v):
                # T implies (C or not-lit) iff T & not-C & lit is unsat
                if not s.solve(base + [lit]).sat:
                    lits.add(lit)
                    changed = True
                    break
    return make_clause(lits)


def is_noise_free_clause(C: Clause, G: CnfFormula, W: Iterable[int], free: Iterable[int],
                         budget: Budget | None = None) -> bool:
    """True iff every free assignment falsifying C can be extended to satisfy G."""
    free = sorted(set(free))
    cvars = {abs(l) for l in C}
    if not cvars <= set(free):
        raise CnfError("clause must be over free variables")
    pick = Solver(budget=budget)
    for v in free:
        pick.ensure_var(v)
    for l in C:
        pick.add_clause((-l,))
    check = Solver(G, budget=budget)
    while True:
        r = pick.solve()
        if not r.sat:
            return True
        z = r.project(free)
        r2 = check.solve(z)
        if not r2.sat:
            return False
        pick.add_clause(negate_cube(z))


# --------------------------------------------------------------------------
# brute-force oracle


class _Dpll:
    """Plain DPLL with unit propagation over occurrence lists; no learning.
    Deliberately independent of the CDCL solver so it can serve as an oracle."""

    def __init__(self, clauses: Sequence[tuple]) -> None:
        self.clauses = list(clauses)
        self.occ: dict[int, list[tuple]] = {}
        for c in self.clauses:
            for l in c:
                self.occ.setdefault(l, []).append(c)

    def solve(self, assign: dict[int, bool], order: list[int]) -> bool:
        val: dict[int, bool] = {}
        trail: list[int] = []
        occ = self.occ

        def propagate(queue: list[int]) -> bool:
            while queue:
                lit = queue.pop()
                for c in occ.get(-lit, ()):
                    open_lit = 0
                    n_open = 0
                    for x in c:
                        b = val.get(abs(x))
                        if b is None:
                            n_open += 1
                            open_lit = x
                        elif b == (x > 0):
                            break
                    else:
                        if n_open == 0:
                            return False
                        if n_open == 1:
                            val[abs(open_lit)] = open_lit > 0
                            trail.append(abs(open_lit))
                            queue.append(open_lit)
            return True

        queue = []
        for c in self.clauses:
            if not c:
                return False
            if len(c) == 1:
                queue.append(c[0])
        queue += [v if b else -v for v, b in assign.items()]
        for l in queue:
            if val.get(abs(l)) == (l < 0):
                return False
            val[abs(l)] = l > 0
        if not propagate(list(queue)):
            return False

        def search(i: int) -> bool:
            while i < len(order) and order[i] in val:
                i += 1
            if i == len(order):
                return True
            v = order[i]
            for b in (False, True):
                mark = len(trail)
                val[v] = b
                trail.append(v)
                if propagate([v if b else -v]) and search(i + 1):
                    return True
                for u in trail[mark:]:
                    del val[u]
                del trail[mark:]
            return False

        return search(0)


def _branch_order(pool: VariablePool, variables: Iterable[int]) -> list[int]:
    rank = {Role.STATE: 0, Role.INPUT: 1}

    def key(v):
        var = pool[v]
        return (var.frame or 0, rank.get(var.role, 2), v)
    return sorted(variables, key=key)


def exists(clauses: Sequence[tuple], assign: dict[int, bool], pool: VariablePool) -> bool:
    vs = {abs(l) for c in clauses for l in c}
    return _Dpll(clauses).solve(assign, _branch_order(pool, vs))


def brute_force_pqe(p: PqeProblem, max_free: int = 16, max_quantified: int | None = 16) -> PqeSolution:
    """Noise-free solution: one full blocking clause per range point of G
    that F & G cannot produce."""
    if len(p.free) > max_free or (max_quantified is not None and len(p.W) > max_quantified):
        raise ValueError(f"problem exceeds oracle scale (|free|={len(p.free)}, |W|={len(p.W)})")
    free = sorted(p.free)
    G = list(p.G)
    FG = G + list(p.F)
    order = _branch_order(p.pool, p.W | p.free)
    dG, dFG = _Dpll(G), _Dpll(FG)
    H = CnfFormula(p.pool)
    for bits in itertools.product((False, True), repeat=len(free)):
        z = dict(zip(free, bits))
        if dG.solve(z, order) and not dFG.solve(z, order):
            H.add(negate_cube(v if b else -v for v, b in z.items()))
    return PqeSolution(H, noisy=False)


# --------------------------------------------------------------------------
# problem files: F and G as DIMACS plus a sidecar of variable roles


def write_problem(p: PqeProblem, prefix: str | Path) -> list[Path]:
    prefix = Path(prefix)
    paths = [prefix.with_suffix(".F.cnf"), prefix.with_suffix(".G.cnf"), prefix.with_suffix(".vars")]
    n = p.pool.max_id
    with open(paths[0], "w") as fh:
        write_dimacs(p.F, fh, num_vars=n)
    with open(paths[1], "w") as fh:
        write_dimacs(p.G, fh, num_vars=n)
    with open(paths[2], "w") as fh:
        for v in sorted(p.W | p.free):
            var = p.pool[v]
            frame = "-" if var.frame is None else var.frame
            fh.write(f"v {v} {var.role.value} {frame}\n")
        for v in sorted(p.W):
            fh.write(f"q {v}\n")
    return paths


def read_problem(prefix: str | Path) -> PqeProblem:
    prefix = Path(prefix)
    pool = VariablePool()
    meta: dict[int, tuple[Role, int | None]] = {}
    W = set()
    for lineno, line in enumerate(prefix.with_suffix(".vars").read_text().splitlines(), 1):
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "v" and len(parts) == 4:
            meta[int(parts[1])] = (Role(parts[2]), None if parts[3] == "-" else int(parts[3]))
        elif parts[0] == "q" and len(parts) == 2:
            W.add(int(parts[1]))
        else:
            raise CnfError(f"line {lineno}: malformed sidecar line {line!r}")
    top = max(meta, default=0)
    for v in range(1, top + 1):
        role, frame = meta.get(v, (Role.AUX, None))
        pool.new(role, frame=frame)
    with open(prefix.with_suffix(".F.cnf")) as fh:
        F = read_dimacs(fh, pool)
    with open(prefix.with_suffix(".G.cnf")) as fh:
        G = read_dimacs(fh, pool)
    free = set(meta) - W
    return PqeProblem(F, G, W, free)
