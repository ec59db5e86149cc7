"""Bounded safety checking by computing range reduction.

The checker keeps one input pair per time frame.  For the current initial
frame it excludes every other input pair with clauses that provably do not
change whether a counterexample of length at most n exists, then makes the
successor of the kept pair the new initial state.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .cnf import (Clause, CnfFormula, Role, make_clause, negate_cube, negate_to_cnf,
                  rename_frame)
from .model import State, Trace, TransitionSystem, Unrolling
from .pqe import PqeEngine, PqeStats, expand_clause
from .sat import DEFAULT_CONFLICT_BUDGET, Budget, ResourceOut, Solver, SolveStats

COUNTEREXAMPLE = "counterexample"
HOLDS_BOUNDED = "holds_bounded"
HOLDS_BY_LOOP = "holds_by_loop"
RESOURCE_OUT = "resource_out"


@dataclass(frozen=True)
class InputPair:
    state: State
    x_input: tuple

    def cube(self, ts: TransitionSystem) -> list[int]:
        return ts.state_cube(self.state) + ts.state_cube(self.x_input, ts.inputs)


class Recorder:
    """Hooks for observing certificates; the default does nothing."""

    def nil(self, root: TransitionSystem, G: Sequence[Clause], C: Clause, bound: int,
            reason: str) -> None:
        pass

    def unreachable(self, root: TransitionSystem, j: int, clause: Clause) -> None:
        pass

    def range_reduction(self, root: TransitionSystem, G: Sequence[Clause], C: Clause, j: int,
                        H: CnfFormula) -> None:
        pass


@dataclass
class CheckConfig:
    seed: int = 0
    conflicts: int = DEFAULT_CONFLICT_BUDGET
    wall_secs: float | None = None
    expand_clauses: bool = False
    minimize_cores: bool = True
    recorder: Recorder = field(default_factory=Recorder)

    def __post_init__(self) -> None:
        if self.conflicts <= 0 or (self.wall_secs is not None and self.wall_secs <= 0):
            raise ValueError("budgets must be positive")


@dataclass
class Verdict:
    kind: str
    bound: int
    trace: Trace | None = None
    loop_index: int | None = None
    reason: str | None = None
    stats: dict = field(default_factory=dict)

    @property
    def fails(self) -> bool:
        return self.kind == COUNTEREXAMPLE

    @property
    def holds(self) -> bool:
        return self.kind in (HOLDS_BOUNDED, HOLDS_BY_LOOP)

    def to_dict(self) -> dict:
        d = {"verdict": self.kind, "bound": self.bound,
             "trace": self.trace.to_json() if self.trace else []}
        if self.loop_index is not None:
            d["loop_index"] = self.loop_index
        if self.reason is not None:
            d["reason"] = self.reason
        d["stats"] = self.stats
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


@dataclass
class RangeReductionState:
    """Everything computed for one excluding clause C.

    ``H[j]`` is H*_j over frame-j variables (``H[0]`` is C).  ``U[m]``
    holds clauses over base state variables falsified only by states with
    no path of exactly m transitions from the current initial states.
    """
    C: Clause
    H: list[CnfFormula]
    U: dict[int, list[Clause]]
    window: int = 0
    back: Solver | None = None
    selectors: dict[int, int] = field(default_factory=dict)


class CrrChecker:
    def __init__(self, ts: TransitionSystem, cfg: CheckConfig | None = None) -> None:
        self.ts = ts
        self.cfg = cfg or CheckConfig()
        self.budget = Budget.with_wall(self.cfg.wall_secs, conflicts_per_call=self.cfg.conflicts)
        self.sat_stats = SolveStats()
        self.pqe_stats = PqeStats(sat=self.sat_stats)
        self.u = Unrolling(ts)
        self.learned = 0
        self.frames = 0

    def _solver(self, clauses=()) -> Solver:
        return Solver(clauses, seed=self.cfg.seed, budget=self.budget, stats=self.sat_stats)

    def stats(self) -> dict:
        return {"pqe_calls": self.pqe_stats.calls, "sat_calls": self.sat_stats.calls,
                "frames_collapsed": self.frames, "clauses_learned": self.learned}

    # -------------------------------------------------------------- main loop

    def run(self, n: int) -> Verdict:
        if n < 1:
            raise ValueError("bound n must be at least 1")
        try:
            return self._run(n)
        except ResourceOut as e:
            return Verdict(RESOURCE_OUT, n, reason=f"{e.phase}:{e.budget}", stats=self.stats())

    def _run(self, n: int) -> Verdict:
        ts = self.ts
        cur = ts
        states: list[State] = []
        inputs: list[tuple] = []
        seen: dict[State, int] = {}
        while len(states) < n:
            pair = pick_input_pair(cur, [], None, solver=self._solver(cur.I))
            assert pair is not None, "initial states are unsatisfiable"
            succ = ts.step(pair.state, pair.x_input)
            witness = ts.bad_input(succ)
            if witness is not None:
                tr = Trace(states + [pair.state, succ], inputs + [pair.x_input, witness])
                return Verdict(COUNTEREXAMPLE, n, tr, stats=self.stats())
            A = negate_cube(pair.cube(ts))
            E = self.constr_time_frame(cur, A, n - len(states))
            if E is not None:
                tr = Trace(states + E.states, inputs + E.inputs)
                return Verdict(COUNTEREXAMPLE, n, tr, stats=self.stats())
            seen[pair.state] = len(states)
            states.append(pair.state)
            inputs.append(pair.x_input)
            self.frames = len(states)
            if succ in seen:
                tr = Trace(states + [succ], list(inputs))
                return Verdict(HOLDS_BY_LOOP, n, tr, loop_index=seen[succ], stats=self.stats())
            cur = ts.with_initial(succ)
        tr = Trace(states + [ts.step(states[-1], inputs[-1])], list(inputs))
        return Verdict(HOLDS_BOUNDED, n, tr, stats=self.stats())

    # ------------------------------------------------------ time-frame level

    def constr_time_frame(self, cur: TransitionSystem, A: Clause, n: int) -> Trace | None:
        """Exclude every input pair of the initial frame except the one
        falsifying A; a trace is returned if that uncovers a counterexample."""
        ts = self.ts
        pick = self._solver(list(cur.I) + [A])
        G: list[Clause] = []
        while True:
            pair = pick_input_pair(cur, G, A, solver=pick)
            if pair is None:
                return None
            C = gen_excluding_clause(pair, A, cur)
            if self.cfg.expand_clauses:
                C = expand_clause(C, cur.I & ts.T, candidates=set(ts.latches) | set(ts.inputs),
                                  budget=self.budget)
            E = self.comp_rr_form(cur, C, G, n)
            if E is not None:
                return E
            G.append(C)
            pick.add_clause(C)
            self.learned += 1

    def comp_rr_form(self, cur: TransitionSystem, C: Clause, G: Sequence[Clause],
                     n: int) -> Trace | None:
        """Compute H*_1..H*_n for C; None certifies that C may be added."""
        ts, u = self.ts, self.u
        rec = self.cfg.recorder
        eng = PqeEngine(ts.pool, budget=self.budget, seed=self.cfg.seed,
                        minimize=self.cfg.minimize_cores, stats=self.pqe_stats)
        to0 = lambda v: u.var(v, 0)
        base = CnfFormula(ts.pool, [C]) if C else CnfFormula(ts.pool, [()])
        H0 = rename_frame(base, to0)
        eng.add(rename_frame(cur.I, to0))
        eng.add(rename_frame(CnfFormula(ts.pool, G), to0))
        rr = RangeReductionState(C, [H0], {0: []})
        for j in range(n):
            rr.window = j + 1
            eng.add(u.unroll(j))
            sol = eng.take_out(rr.H[j], u.state_vars(j + 1))
            H = sol.H
            rr.H.append(H)
            Hb = u.to_base(H, j + 1)
            rec.range_reduction(cur, G, C, j + 1, Hb)
            rr.U.setdefault(j + 1, [])
            if not H.is_empty():
                E = self.elim_bad_states(cur, rr, j + 1, Hb)
                if E is not None:
                    return E
            if H.is_empty() or self._only_bad(Hb):
                chk = self._solver(list(negate_to_cnf(Hb)) + rr.U[j + 1])
                if not chk.solve().sat:
                    rec.nil(cur, list(G), C, n, "all-excluded-unreachable")
                    return None
        rec.nil(cur, list(G), C, n, "no-reachable-bad-excluded")
        return None

    def _only_bad(self, Hb: CnfFormula) -> bool:
        # every state excluded by H* violates P
        return not self._solver(list(negate_to_cnf(Hb)) + list(self.ts.P)).solve().sat

    # ----------------------------------------------------------- bad states

    def elim_bad_states(self, cur: TransitionSystem, rr: RangeReductionState, j: int,
                        Hb: CnfFormula) -> Trace | None:
        ts = self.ts
        s = self._solver(list(ts.not_P) + list(negate_to_cnf(Hb)) + rr.U[j])
        while True:
            r = s.solve()
            if not r.sat:
                return None
            bad = tuple(r.model[v] for v in ts.latches)
            res = self.prop_back(cur, bad, j, rr)
            if isinstance(res, Trace):
                return res
            self._add_u(cur, rr, j, res)
            s.add_clause(res)

    def _back_solver(self, cur: TransitionSystem, rr: RangeReductionState) -> Solver:
        if rr.back is None:
            ts = self.ts
            rr.back = self._solver(ts.T)
            for v in ts.latches + ts.next_vars + ts.inputs:
                rr.back.ensure_var(v)
            sel = ts.pool.new(Role.AUX, "U0")
            rr.selectors[0] = sel
            for c in cur.I:
                rr.back.add_clause(c + (-sel,))
        return rr.back

    def _u_selector(self, rr: RangeReductionState, m: int) -> int:
        sel = rr.selectors.get(m)
        if sel is None:
            sel = self.ts.pool.new(Role.AUX, f"U{m}")
            rr.selectors[m] = sel
            for c in rr.U.get(m, []):
                rr.back.add_clause(c + (-sel,))
        return sel

    def _add_u(self, cur: TransitionSystem, rr: RangeReductionState, m: int,
               clause: Clause) -> None:
        rr.U.setdefault(m, []).append(clause)
        sel = rr.selectors.get(m)
        if sel is not None:
            rr.back.add_clause(clause + (-sel,))
        self.learned += 1
        self.cfg.recorder.unreachable(cur, m, clause)

    def prop_back(self, cur: TransitionSystem, s_k: State, k: int,
                  rr: RangeReductionState) -> Trace | Clause:
        """Walk back from s_k; return an initialized trace or a clause
        falsified by s_k proving it unreachable in exactly k transitions."""
        ts = self.ts
        if k == 0:
            raise ValueError("bad state in frame 0 violates I->P assumption")
        solver = self._back_solver(cur, rr)
        nxt_of = ts.next_of
        states: dict[int, State] = {k: s_k}
        inputs: dict[int, tuple] = {}
        j = k
        while True:
            if j == 0:
                tr = Trace([states[m] for m in range(k + 1)], [inputs[m] for m in range(k)])
                return _truncate_at_bad(ts, tr)
            cube = [nxt_of[s] if b else -nxt_of[s] for s, b in zip(ts.latches, states[j])]
            r = solver.solve([self._u_selector(rr, j - 1)] + cube)
            if r.sat:
                states[j - 1] = tuple(r.model[v] for v in ts.latches)
                inputs[j - 1] = tuple(r.model[v] for v in ts.inputs)
                j -= 1
                continue
            failed = set(r.failed_assumptions)
            latch_of = ts.latch_of
            clause = make_clause(-latch_of[l] if l > 0 else latch_of[-l]
                                 for l in cube if l in failed)
            if j == k:
                return clause
            self._add_u(cur, rr, j, clause)
            j += 1


def _truncate_at_bad(ts: TransitionSystem, tr: Trace) -> Trace:
    for m, s in enumerate(tr.states):
        w = ts.bad_input(s)
        if w is not None:
            return Trace(tr.states[: m + 1], tr.inputs[:m] + [w])
    raise AssertionError("trace does not reach a bad state")


# --------------------------------------------------------------------------
# standalone helpers


def pick_input_pair(ts: TransitionSystem, G: Sequence[Clause], A: Clause | None,
                    solver: Solver | None = None) -> InputPair | None:
    """A model of I & G & A projected to the state and input variables.

    When ``solver`` is given it is assumed to hold those clauses already.
    """
    if solver is None:
        solver = Solver(list(ts.I) + list(G) + ([A] if A is not None else []))
    for v in ts.latches + ts.inputs:
        solver.ensure_var(v)
    r = solver.solve()
    if not r.sat:
        return None
    return InputPair(tuple(r.model[v] for v in ts.latches), tuple(r.model[v] for v in ts.inputs))


def gen_excluding_clause(pair: InputPair, A: Clause | None, ts: TransitionSystem) -> Clause:
    """The clause falsified exactly by ``pair`` over S and X."""
    C = negate_cube(pair.cube(ts))
    if A is not None and set(C) == set(A):
        raise ValueError("pair is the protected one")
    return C


def mc_crr(ts: TransitionSystem, n: int, cfg: CheckConfig | None = None) -> Verdict:
    return CrrChecker(ts, cfg).run(n)


def constr_time_frame(ts: TransitionSystem, A: Clause, n: int,
                      cfg: CheckConfig | None = None) -> Trace | None:
    return CrrChecker(ts, cfg).constr_time_frame(ts, A, n)


def comp_rr_form(ts: TransitionSystem, C: Clause, n: int, cfg: CheckConfig | None = None,
                 G: Sequence[Clause] = ()) -> Trace | None:
    return CrrChecker(ts, cfg).comp_rr_form(ts, C, G, n)
