"""Independent reference computations for the tests.

Nothing here uses the CDCL solver or the PQE engine for its answers.  Systems
are simulated straight from the AIG, formulas are evaluated by truth table.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from crrcheck.aiger import Aig
from crrcheck.checker import Recorder
from crrcheck.cnf import CnfFormula, Gate, Circuit, VariablePool, Role, make_clause
from crrcheck.model import TransitionSystem, Unrolling, from_aig
from crrcheck.pqe import PqeProblem, brute_force_pqe


# --------------------------------------------------------------------------
# truth tables


def assignments(n: int) -> np.ndarray:
    """Row r holds the bits of r, column i being bit i."""
    return ((np.arange(1 << n)[:, None] >> np.arange(n)) & 1).astype(bool)


def table(clauses, order: list[int], rows: np.ndarray | None = None) -> np.ndarray:
    """Truth value of a CNF under every assignment of ``order``."""
    rows = assignments(len(order)) if rows is None else rows
    col = {v: i for i, v in enumerate(order)}
    out = np.ones(len(rows), dtype=bool)
    for c in clauses:
        sat = np.zeros(len(rows), dtype=bool)
        for l in c:
            x = rows[:, col[abs(l)]]
            sat |= x if l > 0 else ~x
        out &= sat
    return out


def project(tab: np.ndarray, n_free: int, n_bound: int) -> np.ndarray:
    """Exists over the high ``n_bound`` columns; free variables come first."""
    return tab.reshape(1 << n_bound, 1 << n_free).any(axis=0)


def eval_clause(c, val: dict[int, bool]) -> bool:
    return any(val[abs(l)] == (l > 0) for l in c)


def eval_cnf(clauses, val: dict[int, bool]) -> bool:
    return all(eval_clause(c, val) for c in clauses)


# --------------------------------------------------------------------------
# random formulas


def random_cnf(rng: random.Random, variables: list[int], m: int, width=(1, 3)) -> list[tuple]:
    out = []
    while len(out) < m:
        w = rng.randint(*width)
        vs = rng.sample(variables, min(w, len(variables)))
        out.append(make_clause(v if rng.random() < 0.5 else -v for v in vs))
    return out


def random_circuit(rng: random.Random, pool: VariablePool, n_in: int, n_gates: int,
                   n_out: int) -> tuple[Circuit, list[int], list[int], list[int]]:
    """Random AND/NOT circuit; returns (circuit, inputs, internals, outputs)."""
    ins = [pool.new(Role.INPUT) for _ in range(n_in)]
    wires = list(ins)
    gates = []
    for _ in range(n_gates):
        z = pool.new(Role.INTERNAL)
        if rng.random() < 0.2:
            gates.append(Gate("not", z, (rng.choice(wires),)))
        else:
            a, b = rng.sample(wires, 2)
            gates.append(Gate("and", z, (a if rng.random() < 0.5 else -a,
                                         b if rng.random() < 0.5 else -b)))
        wires.append(z)
    internals = [g.out for g in gates]
    outs = []
    srcs = wires[n_in:] or wires
    for src in rng.sample(srcs, min(n_out, len(srcs))):
        o = pool.new(Role.NEXT)
        gates.append(Gate("buf", o, (src,)))
        outs.append(o)
    return Circuit(ins, gates), ins, internals, outs


# --------------------------------------------------------------------------
# explicit-state systems


class AigSim:
    """Gate-level evaluation of an AIG by literal arithmetic."""

    def __init__(self, aig: Aig) -> None:
        self.aig = aig
        self.defs = {lhs >> 1: (a, b) for lhs, a, b in aig.ands}
        self.bad_lit = aig.property_literal()

    def _values(self, state, inputs) -> dict[int, bool]:
        val = {0: False}
        for (lit, _, _), b in zip(self.aig.latches, state):
            val[lit >> 1] = b
        for lit, b in zip(self.aig.inputs, inputs):
            val[lit >> 1] = b
        return val

    def _lit(self, lit: int, val: dict[int, bool]) -> bool:
        v = lit >> 1
        stack = [v]
        while stack:
            u = stack[-1]
            if u in val:
                stack.pop()
                continue
            a, b = self.defs[u]
            pend = [w for w in (a >> 1, b >> 1) if w not in val]
            if pend:
                stack.extend(pend)
                continue
            val[u] = (val[a >> 1] ^ bool(a & 1)) and (val[b >> 1] ^ bool(b & 1))
            stack.pop()
        return val[v] ^ bool(lit & 1)

    def step(self, state, inputs) -> tuple:
        val = self._values(state, inputs)
        return tuple(self._lit(nxt, val) for _, nxt, _ in self.aig.latches)

    def bad(self, state, inputs) -> bool:
        return self._lit(self.bad_lit, self._values(state, inputs))

    def initial_states(self) -> list[tuple]:
        choices = []
        for lit, _, reset in self.aig.latches:
            choices.append((False, True) if reset == lit else (bool(reset),))
        return list(itertools.product(*choices))


class Explicit:
    """All states, successors and bad states of a small system."""

    def __init__(self, aig: Aig, ts: TransitionSystem | None = None) -> None:
        self.sim = AigSim(aig)
        self.ts = ts if ts is not None else from_aig(aig)
        nl, ni = len(aig.latches), len(aig.inputs)
        self.states = list(itertools.product((False, True), repeat=nl))
        self.inputs = list(itertools.product((False, True), repeat=ni))
        self.succ = {(s, x): self.sim.step(s, x) for s in self.states for x in self.inputs}
        self.bad = {s for s in self.states if any(self.sim.bad(s, x) for x in self.inputs)}
        self.init = self.sim.initial_states()

    def image(self, states) -> set:
        return {self.succ[s, x] for s in states for x in self.inputs}

    def reach_exact(self, roots, j: int) -> set:
        cur = set(roots)
        for _ in range(j):
            cur = self.image(cur)
        return cur

    @cached_property
    def dist_to_bad(self) -> dict[tuple, float]:
        """Fewest transitions from a state to some bad state (inf if none)."""
        dist = {s: (0 if s in self.bad else float("inf")) for s in self.states}
        changed = True
        while changed:
            changed = False
            for (s, _), t in self.succ.items():
                if dist[t] + 1 < dist[s]:
                    dist[s] = dist[t] + 1
                    changed = True
        return dist

    def shortest_cex(self, roots=None) -> float:
        roots = self.init if roots is None else roots
        return min(self.dist_to_bad[s] for s in roots)

    def pair_val(self, s, x) -> dict[int, bool]:
        val = dict(zip(self.ts.latches, s))
        val.update(zip(self.ts.inputs, x))
        return val

    def excluded(self, roots, G, C, n: int) -> list[set]:
        """Sets E_1..E_n of states falsifying the noise-free H_i for C.

        A state reachable in i+1 steps is excluded iff each of its
        predecessors reachable in i steps is excluded (for i = 0: each of
        its initial input pairs satisfying G falsifies C).
        """
        pairs = [(s, x) for s in roots for x in self.inputs
                 if eval_cnf(G, self.pair_val(s, x))]
        reach = {self.succ[p] for p in pairs}
        ok = {self.succ[p] for p in pairs if eval_clause(C, self.pair_val(*p))}
        out = [reach - ok]
        for _ in range(1, n):
            allowed = reach - out[-1]
            reach = self.image(reach)
            out.append(reach - self.image(allowed))
        return out

    def collapse_preserves_bad_traces(self, root_states, G, C, n: int) -> bool:
        """If a counterexample of length <= n starts with a pair allowed by
        G, one also starts with a pair allowed by G and C."""
        def has_cex(extra):
            for s in root_states:
                for x in self.inputs:
                    val = self.pair_val(s, x)
                    if eval_cnf(G + extra, val) and self.dist_to_bad[self.succ[s, x]] <= n - 1:
                        return True
            return False
        return has_cex([C]) or not has_cex([])

    def falsified_states(self, formula, variables) -> set:
        return {s for s in self.states if not eval_cnf(formula, dict(zip(variables, s)))}


# --------------------------------------------------------------------------
# noise-free range reduction through the brute-force PQE oracle


def noise_free_chain(ts: TransitionSystem, C, n: int, G=(), u: Unrolling | None = None
                     ) -> list[CnfFormula]:
    """H_1..H_n by repeated brute-force PQE, each over frame-i state variables.

    H_{i+1} takes H_i out of Exists[H_i & I & G & T_0 & ... & T_i].
    """
    u = u or Unrolling(ts)
    pool = ts.pool
    to0 = lambda v: u.var(v, 0)
    ctx = CnfFormula(pool)
    ctx.extend(u.at(ts.I, 0))
    ctx.extend(CnfFormula(pool, [tuple(to0(l) if l > 0 else -to0(-l) for l in c) for c in G]))
    F = CnfFormula(pool, [tuple(to0(l) if l > 0 else -to0(-l) for l in C)])
    out = []
    for i in range(n):
        ctx = ctx & u.unroll(i)
        free = set(u.state_vars(i + 1))
        W = (ctx.variables() | F.variables()) - free
        sol = brute_force_pqe(PqeProblem(F, ctx, W, free), max_quantified=None)
        out.append(sol.H)
        F = sol.H
    return out


# --------------------------------------------------------------------------
# certificate recording


@dataclass
class Events(Recorder):
    nils: list = field(default_factory=list)
    unreach: list = field(default_factory=list)
    ranges: list = field(default_factory=list)

    def nil(self, root, G, C, bound, reason):
        self.nils.append((root, list(G), C, bound, reason))

    def unreachable(self, root, j, clause):
        self.unreach.append((root, j, clause))

    def range_reduction(self, root, G, C, j, H):
        self.ranges.append((root, list(G), C, j, H))
