"""Incremental CDCL SAT solver with assumptions.

Two-watched-literal propagation, first-UIP learning with local clause
minimisation, VSIDS decisions, Luby restarts and phase saving.  When a call
under assumptions is unsatisfiable the solver reports a subset of the
assumption literals that is already unsatisfiable together with the clause
database.

Literal-indexed arrays use Python's negative indexing: for a capacity ``N``
an array has ``2N + 1`` slots and literal ``l`` lives at index ``l``, so
``-v`` wraps around to the upper half.  The arrays are rebuilt when the
capacity grows.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field
from typing import Iterable, Sequence

SAT = "SAT"
UNSAT = "UNSAT"

DEFAULT_CONFLICT_BUDGET = 10_000_000


class ResourceOut(Exception):
    """A resource budget ran out before an answer was found."""

    def __init__(self, phase: str, budget: str, partial=None) -> None:
        super().__init__(f"{phase}: {budget} budget exhausted")
        self.phase = phase
        self.budget = budget
        self.partial = partial


@dataclass
class Budget:
    """Shared limits: conflicts per solver call, solver calls overall and a
    wall-clock deadline (absolute ``time.monotonic`` value)."""

    conflicts_per_call: int = DEFAULT_CONFLICT_BUDGET
    max_queries: int | None = None
    deadline: float | None = None
    queries: int = 0

    @classmethod
    def with_wall(cls, seconds: float | None, **kw) -> "Budget":
        b = cls(**kw)
        if seconds is not None:
            b.deadline = time.monotonic() + seconds
        return b

    def charge_query(self, phase: str = "sat") -> None:
        self.queries += 1
        if self.max_queries is not None and self.queries > self.max_queries:
            raise ResourceOut(phase, "query")
        if self.deadline is not None and time.monotonic() > self.deadline:
            raise ResourceOut(phase, "wall")


@dataclass
class SolveStats:
    calls: int = 0
    conflicts: int = 0
    decisions: int = 0
    propagations: int = 0


@dataclass
class SatResult:
    status: str
    model: list | None = None  # model[v] is the value of variable v (index 0 unused)
    failed_assumptions: list = field(default_factory=list)

    @property
    def sat(self) -> bool:
        return self.status == SAT

    def value(self, lit: int) -> bool:
        b = self.model[abs(lit)]
        return b if lit > 0 else not b

    def project(self, variables: Iterable[int]) -> list[int]:
        """The model restricted to ``variables`` as a cube of literals."""
        m = self.model
        return [v if m[v] else -v for v in variables]


def _luby(i: int) -> int:
    # Luby sequence 1 1 2 1 1 2 4 ..., i >= 0
    size, seq = 1, 0
    while size < i + 1:
        seq += 1
        size = 2 * size + 1
    while size - 1 != i:
        size = (size - 1) >> 1
        seq -= 1
        i = i % size
    return 1 << seq


class Solver:
    """A single-threaded incremental solver instance."""

    restart_base = 100
    var_decay = 0.95

    def __init__(self, clauses: Iterable[Iterable[int]] = (), seed: int = 0,
                 budget: Budget | None = None, stats: SolveStats | None = None) -> None:
        self.cap = 0
        self.val: list[int] = [0]          # literal-indexed: 1 true, -1 false, 0 open
        self.watches: list[list] = [[]]    # literal-indexed
        self.level: list[int] = [0]
        self.reason: list = [None]
        self.activity: list[float] = [0.0]
        self.phase: list[bool] = [False]
        self.seen: list[int] = [0]
        self.heap: list[int] = []
        self.heap_pos: list[int] = [-1]
        self.nvars = 0
        self.clauses: list[list[int]] = []
        self.learnts: list[list[int]] = []
        self.trail: list[int] = []
        self.trail_lim: list[int] = []
        self.qhead = 0
        self.var_inc = 1.0
        self.ok = True
        self.max_learnts = 2000
        self.rng = random.Random(seed) if seed else None
        self.budget = budget
        self.stats = stats if stats is not None else SolveStats()
        for c in clauses:
            self.add_clause(c)

    # ------------------------------------------------------------------ vars

    def _grow(self, v: int) -> None:
        if v <= self.cap:
            return
        old = self.cap
        cap = max(v, 2 * old, 16)
        size = 2 * cap + 1
        val = [0] * size
        watches = [[] for _ in range(size)]
        for x in range(1, old + 1):
            val[x] = self.val[x]
            val[-x] = self.val[-x]
            watches[x] = self.watches[x]
            watches[-x] = self.watches[-x]
        self.val, self.watches = val, watches
        extra = cap - old
        self.level.extend([0] * extra)
        self.reason.extend([None] * extra)
        self.activity.extend([0.0] * extra)
        self.phase.extend([False] * extra)
        self.seen.extend([0] * extra)
        self.heap_pos.extend([-1] * extra)
        self.cap = cap

    def ensure_var(self, v: int) -> None:
        if v <= self.nvars:
            return
        self._grow(v)
        if self.rng is not None:
            for x in range(self.nvars + 1, v + 1):
                self.activity[x] = self.rng.random() * 1e-5
        self.nvars = v

    # ------------------------------------------------------------------ heap

    def _heap_up(self, i: int) -> None:
        heap, pos, act = self.heap, self.heap_pos, self.activity
        v = heap[i]
        a = act[v]
        while i > 0:
            p = (i - 1) >> 1
            pv = heap[p]
            if act[pv] >= a:
                break
            heap[i] = pv
            pos[pv] = i
            i = p
        heap[i] = v
        pos[v] = i

    def _heap_down(self, i: int) -> None:
        heap, pos, act = self.heap, self.heap_pos, self.activity
        n = len(heap)
        v = heap[i]
        a = act[v]
        while True:
            c = 2 * i + 1
            if c >= n:
                break
            if c + 1 < n and act[heap[c + 1]] > act[heap[c]]:
                c += 1
            if act[heap[c]] <= a:
                break
            heap[i] = heap[c]
            pos[heap[i]] = i
            i = c
        heap[i] = v
        pos[v] = i

    def _heap_insert(self, v: int) -> None:
        if self.heap_pos[v] >= 0:
            return
        self.heap.append(v)
        self.heap_pos[v] = len(self.heap) - 1
        self._heap_up(len(self.heap) - 1)

    def _heap_pop(self) -> int:
        heap, pos = self.heap, self.heap_pos
        v = heap[0]
        last = heap.pop()
        pos[v] = -1
        if heap:
            heap[0] = last
            pos[last] = 0
            self._heap_down(0)
        return v

    def _bump(self, v: int) -> None:
        act = self.activity
        act[v] += self.var_inc
        if act[v] > 1e100:
            for x in range(1, self.nvars + 1):
                act[x] *= 1e-100
            self.var_inc *= 1e-100
        if self.heap_pos[v] >= 0:
            self._heap_up(self.heap_pos[v])

    # --------------------------------------------------------------- clauses

    def add_clause(self, lits: Iterable[int]) -> bool:
        """Add a clause permanently.  Returns False once the database is
        known to be unsatisfiable."""
        if not self.ok:
            return False
        if self.trail_lim:
            self._cancel_until(0)
        s = set(lits)
        if not s:
            self.ok = False
            return False
        m = max(abs(l) for l in s)
        if m > self.nvars:
            self.ensure_var(m)
        val = self.val
        pos = self.heap_pos
        c = []
        for l in s:
            if -l in s:
                return True
            # only variables that occur in clauses are branched on
            if pos[l if l > 0 else -l] < 0:
                self._heap_insert(l if l > 0 else -l)
            x = val[l]
            if x == 1:
                return True
            if x == 0:
                c.append(l)
        if not c:
            self.ok = False
            return False
        if len(c) == 1:
            self._enqueue(c[0], None)
            if self._propagate() is not None:
                self.ok = False
            return self.ok
        c.sort(key=abs)
        self.clauses.append(c)
        self.watches[c[0]].append(c)
        self.watches[c[1]].append(c)
        return True

    def add_clauses(self, clauses: Iterable[Iterable[int]]) -> bool:
        for c in clauses:
            self.add_clause(c)
        return self.ok

    # ----------------------------------------------------------- core search

    def _enqueue(self, lit: int, reason) -> None:
        v = lit if lit > 0 else -lit
        self.val[lit] = 1
        self.val[-lit] = -1
        self.level[v] = len(self.trail_lim)
        self.reason[v] = reason
        self.trail.append(lit)

    def _propagate(self):
        val = self.val
        trail = self.trail
        watches = self.watches
        level = self.level
        reason = self.reason
        dl = len(self.trail_lim)
        qhead = self.qhead
        props = 0
        while qhead < len(trail):
            fl = -trail[qhead]
            qhead += 1
            props += 1
            ws = watches[fl]
            i = j = 0
            n = len(ws)
            while i < n:
                c = ws[i]
                i += 1
                if c[0] == fl:
                    c[0] = c[1]
                    c[1] = fl
                first = c[0]
                if val[first] == 1:
                    ws[j] = c
                    j += 1
                    continue
                found = False
                for k in range(2, len(c)):
                    lk = c[k]
                    if val[lk] != -1:
                        c[1] = lk
                        c[k] = fl
                        watches[lk].append(c)
                        found = True
                        break
                if found:
                    continue
                ws[j] = c
                j += 1
                if val[first] == -1:
                    while i < n:
                        ws[j] = ws[i]
                        j += 1
                        i += 1
                    del ws[j:]
                    self.qhead = len(trail)
                    self.stats.propagations += props
                    return c
                val[first] = 1
                val[-first] = -1
                v = first if first > 0 else -first
                level[v] = dl
                reason[v] = c
                trail.append(first)
            del ws[j:]
        self.qhead = qhead
        self.stats.propagations += props
        return None

    def _analyze(self, confl):
        seen, level, reason, trail = self.seen, self.level, self.reason, self.trail
        dl = len(self.trail_lim)
        learnt = [0]
        path = 0
        p = 0
        idx = len(trail) - 1
        to_clear = []
        lits = confl
        while True:
            for q in lits:
                if q == p:
                    continue
                v = q if q > 0 else -q
                if not seen[v] and level[v] > 0:
                    seen[v] = 1
                    to_clear.append(v)
                    self._bump(v)
                    if level[v] >= dl:
                        path += 1
                    else:
                        learnt.append(q)
            while True:
                p = trail[idx]
                idx -= 1
                if seen[p if p > 0 else -p]:
                    break
            pv = p if p > 0 else -p
            path -= 1
            if path == 0:
                break
            lits = reason[pv]
            seen[pv] = 0
        learnt[0] = -p
        # local minimisation: drop literals implied by other learnt literals
        if len(learnt) > 2:
            keep = [learnt[0]]
            for q in learnt[1:]:
                r = reason[q if q > 0 else -q]
                if r is None:
                    keep.append(q)
                    continue
                for x in r:
                    xv = x if x > 0 else -x
                    if xv != (q if q > 0 else -q) and not seen[xv] and level[xv] > 0:
                        keep.append(q)
                        break
            learnt = keep
        for v in to_clear:
            seen[v] = 0
        if len(learnt) == 1:
            bt = 0
        else:
            mi = 1
            for i in range(2, len(learnt)):
                if level[abs(learnt[i])] > level[abs(learnt[mi])]:
                    mi = i
            learnt[1], learnt[mi] = learnt[mi], learnt[1]
            bt = level[abs(learnt[1])]
        return learnt, bt

    def _analyze_final(self, a: int) -> list[int]:
        """Assumption literals responsible for ``a`` being false."""
        failed = [a]
        av = abs(a)
        if self.level[av] == 0:
            return failed
        seen, reason, level, trail = self.seen, self.reason, self.level, self.trail
        seen[av] = 1
        for i in range(len(trail) - 1, self.trail_lim[0] - 1, -1):
            l = trail[i]
            v = l if l > 0 else -l
            if seen[v]:
                r = reason[v]
                if r is None:
                    if v != av:
                        failed.append(l)
                else:
                    for q in r:
                        qv = q if q > 0 else -q
                        if qv != v and level[qv] > 0:
                            seen[qv] = 1
                seen[v] = 0
        seen[av] = 0
        return failed

    def _cancel_until(self, lvl: int) -> None:
        if len(self.trail_lim) <= lvl:
            return
        val, phase, trail = self.val, self.phase, self.trail
        pos = self.heap_pos
        start = self.trail_lim[lvl]
        for i in range(len(trail) - 1, start - 1, -1):
            l = trail[i]
            v = l if l > 0 else -l
            val[l] = 0
            val[-l] = 0
            self.reason[v] = None
            phase[v] = l > 0
            if pos[v] < 0:
                self._heap_insert(v)
        del trail[start:]
        del self.trail_lim[lvl:]
        self.qhead = len(trail)

    def _pick_branch(self) -> int:
        val = self.val
        while self.heap:
            v = self._heap_pop()
            if val[v] == 0:
                return v if self.phase[v] else -v
        return 0

    def _reduce_db(self) -> None:
        # only called at decision level 0: reasons are no longer needed
        self.learnts.sort(key=len)
        self.learnts = self.learnts[: len(self.learnts) // 2]
        self._rebuild_watches()

    def _rebuild_watches(self) -> None:
        val = self.val
        for ws in self.watches:
            ws.clear()
        kept = []
        for group in (self.clauses, self.learnts):
            out = []
            for c in group:
                if any(val[l] == 1 for l in c):
                    continue
                c = [l for l in c if val[l] == 0]
                if len(c) < 2:
                    # unit or empty under level-0 facts: propagate as a fact
                    if not c:
                        self.ok = False
                        return
                    self._enqueue(c[0], None)
                    continue
                self.watches[c[0]].append(c)
                self.watches[c[1]].append(c)
                out.append(c)
            kept.append(out)
        self.clauses, self.learnts = kept
        if self._propagate() is not None:
            self.ok = False

    # ------------------------------------------------------------------ solve

    def solve(self, assumptions: Sequence[int] = ()) -> SatResult:
        self.stats.calls += 1
        if self.budget is not None:
            self.budget.charge_query()
        if not self.ok:
            return SatResult(UNSAT, failed_assumptions=[])
        if assumptions:
            m = max(abs(a) for a in assumptions)
            if m > self.nvars:
                self.ensure_var(m)
        self._cancel_until(0)
        if self._propagate() is not None:
            self.ok = False
            return SatResult(UNSAT, failed_assumptions=[])
        conflict_limit = (self.budget.conflicts_per_call if self.budget is not None
                          else DEFAULT_CONFLICT_BUDGET)
        deadline = self.budget.deadline if self.budget is not None else None
        conflicts = 0
        restart = 0
        next_restart = _luby(restart) * self.restart_base
        since_restart = 0
        val = self.val
        assumptions = list(assumptions)
        na = len(assumptions)
        while True:
            confl = self._propagate()
            if confl is not None:
                conflicts += 1
                since_restart += 1
                self.stats.conflicts += 1
                if not self.trail_lim:
                    self.ok = False
                    return SatResult(UNSAT, failed_assumptions=[])
                learnt, bt = self._analyze(confl)
                self._cancel_until(bt)
                if len(learnt) == 1:
                    self._enqueue(learnt[0], None)
                else:
                    self.learnts.append(learnt)
                    self.watches[learnt[0]].append(learnt)
                    self.watches[learnt[1]].append(learnt)
                    self._enqueue(learnt[0], learnt)
                self.var_inc /= self.var_decay
                if conflicts > conflict_limit:
                    self._cancel_until(0)
                    raise ResourceOut("sat", "conflict")
                if deadline is not None and (conflicts & 255) == 0 and time.monotonic() > deadline:
                    self._cancel_until(0)
                    raise ResourceOut("sat", "wall")
                continue
            if since_restart >= next_restart:
                since_restart = 0
                restart += 1
                next_restart = _luby(restart) * self.restart_base
                self._cancel_until(0)
                if len(self.learnts) > self.max_learnts + len(self.trail):
                    self._reduce_db()
                    self.max_learnts = int(self.max_learnts * 1.1)
                    if not self.ok:
                        return SatResult(UNSAT, failed_assumptions=[])
                continue
            dl = len(self.trail_lim)
            if dl < na:
                a = assumptions[dl]
                x = val[a]
                if x == 1:
                    self.trail_lim.append(len(self.trail))
                    continue
                if x == -1:
                    failed = self._analyze_final(a)
                    self._cancel_until(0)
                    return SatResult(UNSAT, failed_assumptions=failed)
                self.trail_lim.append(len(self.trail))
                self._enqueue(a, None)
                continue
            lit = self._pick_branch()
            if lit == 0:
                model = [False] * (self.nvars + 1)
                for v in range(1, self.nvars + 1):
                    model[v] = val[v] == 1
                self._cancel_until(0)
                return SatResult(SAT, model=model)
            self.stats.decisions += 1
            self.trail_lim.append(len(self.trail))
            self._enqueue(lit, None)

    # ------------------------------------------------------------- utilities

    def to_dimacs(self) -> str:
        """Current clause database (original clauses and level-0 facts)."""
        lines = [f"p cnf {self.nvars} {len(self.clauses) + len(self.trail)}"]
        for c in self.clauses:
            lines.append(" ".join(map(str, c)) + " 0")
        for l in self.trail[: self.trail_lim[0] if self.trail_lim else len(self.trail)]:
            lines.append(f"{l} 0")
        return "\n".join(lines) + "\n"


def solve(clauses: Iterable[Iterable[int]], assumptions: Sequence[int] = (),
          budget: Budget | None = None, seed: int = 0) -> SatResult:
    return Solver(clauses, seed=seed, budget=budget).solve(assumptions)


def is_implied(formula: Iterable[Iterable[int]], clause: Iterable[int],
               budget: Budget | None = None) -> bool:
    """True iff ``formula`` implies ``clause`` (formula and not-clause unsat)."""
    return not solve(formula, [-l for l in clause], budget=budget).sat
