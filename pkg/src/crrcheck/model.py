"""Transition systems, the abstract counter generator, time-frame unrolling
and simulation-based trace replay."""

from __future__ import annotations

import dataclasses
import random
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

from . import aiger
from .aiger import Aig, AigBuilder
from .cnf import (Circuit, CnfError, CnfFormula, Gate, Role, VariablePool,
                  gate_clauses, rename_frame)
from .sat import Solver

State = tuple  # tuple[bool, ...] aligned with TransitionSystem.latches


class ModelError(ValueError):
    pass


def _lit(v: int, b: bool) -> int:
    return v if b else -v


@dataclass
class TransitionSystem:
    """A circuit N(S, X, Y, S') with initial states I and property P.

    T encodes the next-state functions.  The property is given by the
    literal ``bad`` over S, X and the internal wires; ``not_P`` holds the
    definitions of its cone plus the unit ``bad`` and ``P`` the same
    definitions plus ``-bad``.  When the cone reads primary inputs a state
    is bad if some input makes ``bad`` true.
    """
    pool: VariablePool
    latches: list[int]
    next_vars: list[int]
    inputs: list[int]
    internals: list[int]
    gates: list[Gate]            # all gates, topological
    T: CnfFormula
    I: CnfFormula
    P: CnfFormula
    not_P: CnfFormula
    bad: int | bool
    name: str = "model"
    gate_count: int = 0
    reset: list[bool | None] = field(default_factory=list)

    def __post_init__(self) -> None:
        sets = [set(self.latches), set(self.next_vars), set(self.inputs), set(self.internals)]
        total = sum(len(s) for s in sets)
        if len(set().union(*sets)) != total:
            raise ModelError("variable sets S, S', X, Y must be disjoint")
        known = set().union(*sets)
        stray = (self.T.variables() | self.P.variables() | self.not_P.variables()) - known
        if stray:
            raise ModelError(f"unclassified variables {sorted(stray)[:5]}")

    # ------------------------------------------------------------- queries

    @cached_property
    def next_of(self) -> dict[int, int]:
        return dict(zip(self.latches, self.next_vars))

    @cached_property
    def latch_of(self) -> dict[int, int]:
        return dict(zip(self.next_vars, self.latches))

    @cached_property
    def _prop_gates(self) -> list[Gate]:
        if isinstance(self.bad, bool):
            return []
        return _cone(self.gates, [self.bad])

    @cached_property
    def bad_reads_inputs(self) -> bool:
        xs = set(self.inputs)
        if not isinstance(self.bad, bool) and abs(self.bad) in xs:
            return True
        return any(abs(l) in xs for g in self._prop_gates for l in g.inputs)

    def check_init_implies_property(self) -> None:
        s = Solver(list(self.I) + list(self.not_P))
        if s.solve().sat:
            raise ModelError("initial states violate the property (I -> P fails)")

    def with_initial(self, state: State) -> "TransitionSystem":
        """The same system whose only initial state is ``state``."""
        I = CnfFormula(self.pool, [(_lit(s, b),) for s, b in zip(self.latches, state)])
        return dataclasses.replace(self, I=I, reset=list(state))

    def state_cube(self, state: State, variables: Sequence[int] | None = None) -> list[int]:
        return [_lit(v, b) for v, b in zip(variables or self.latches, state)]

    def initial_states(self) -> list[State]:
        free = [i for i, r in enumerate(self.reset) if r is None]
        out = []
        for m in range(1 << len(free)):
            st = [bool(r) for r in self.reset]
            for j, i in enumerate(free):
                st[i] = bool(m >> j & 1)
            out.append(tuple(st))
        return out

    # ---------------------------------------------------------- simulation

    def _eval(self, state: State, inputs: Sequence[bool]) -> dict[int, bool]:
        val = dict(zip(self.latches, state))
        val.update(zip(self.inputs, inputs))
        for g in self.gates:
            if g.kind == "and":
                v = True
                for l in g.inputs:
                    if val[abs(l)] != (l > 0):
                        v = False
                        break
            elif g.kind == "buf":
                l = g.inputs[0]
                v = val[abs(l)] == (l > 0)
            elif g.kind == "not":
                l = g.inputs[0]
                v = val[abs(l)] != (l > 0)
            else:
                v = bool(g.value)
            val[g.out] = v
        return val

    def step(self, state: State, inputs: Sequence[bool]) -> State:
        if len(inputs) != len(self.inputs) or len(state) != len(self.latches):
            raise ModelError("state/input width mismatch")
        val = self._eval(state, inputs)
        return tuple(val[n] for n in self.next_vars)

    def bad_under(self, state: State, inputs: Sequence[bool]) -> bool:
        if isinstance(self.bad, bool):
            return self.bad
        val = self._eval(state, inputs)
        return val[abs(self.bad)] == (self.bad > 0)

    def bad_input(self, state: State) -> tuple[bool, ...] | None:
        """An input vector under which ``state`` is bad, or None if it is good."""
        zero = tuple(False for _ in self.inputs)
        if not self.bad_reads_inputs:
            return zero if self.bad_under(state, zero) else None
        s = Solver(list(self.not_P))
        r = s.solve(self.state_cube(state))
        if not r.sat:
            return None
        return tuple(r.model[x] if x <= len(r.model) - 1 else False for x in self.inputs)

    def is_bad(self, state: State) -> bool:
        return self.bad_input(state) is not None

    @property
    def width(self) -> tuple[int, int]:
        return len(self.latches), len(self.inputs)


def _cone(gates: Sequence[Gate], roots: Sequence[int]) -> list[Gate]:
    by_out = {g.out: g for g in gates}
    need = set()
    stack = [abs(r) for r in roots]
    while stack:
        v = stack.pop()
        g = by_out.get(v)
        if g is None or v in need:
            continue
        need.add(v)
        stack.extend(abs(l) for l in g.inputs)
    return [g for g in gates if g.out in need]


# --------------------------------------------------------------------------
# AIGER -> transition system


def from_aig(aig: Aig, name: str = "model", check: bool = True) -> TransitionSystem:
    pool = VariablePool()
    sym = aig.symbols
    mapped: dict[int, int | bool] = {0: False}
    latches, nexts, inputs = [], [], []
    for k, lit in enumerate(aig.inputs):
        x = pool.new(Role.INPUT, sym.get(f"i{k}", f"x{k}"))
        inputs.append(x)
        mapped[lit >> 1] = x
    for k, (lit, _, _) in enumerate(aig.latches):
        nm = sym.get(f"l{k}", f"s{k}")
        s = pool.new(Role.STATE, nm)
        latches.append(s)
        mapped[lit >> 1] = s
    for s in latches:
        nexts.append(pool.new(Role.NEXT, pool.name(s) + "'"))
    ands = {lhs >> 1: (a, b) for lhs, a, b in aig.ands}
    gates: list[Gate] = []
    internals: list[int] = []
    strash: dict[tuple[int, int], int] = {}

    def get(alit: int) -> int | bool:
        v = alit >> 1
        if v not in mapped:
            resolve(v)
        m = mapped[v]
        if alit & 1:
            return (not m) if isinstance(m, bool) else -m
        return m

    def resolve(root: int) -> None:
        # iterative post-order over the and-graph with cycle detection
        visiting = set()
        stack = [root]
        while stack:
            v = stack[-1]
            if v in mapped:
                stack.pop()
                continue
            if v not in ands:
                raise ModelError(f"AIGER variable {v} is not defined")
            a, b = ands[v]
            pending = [u for u in (a >> 1, b >> 1) if u not in mapped]
            if pending:
                if v in visiting:
                    raise ModelError(f"combinational cycle through AIGER variable {v}")
                visiting.add(v)
                stack.extend(pending)
                continue
            stack.pop()
            x, y = get(a), get(b)
            if x is False or y is False:
                mapped[v] = False
            elif x is True:
                mapped[v] = y
            elif y is True or x == y:
                mapped[v] = x
            elif x == -y:
                mapped[v] = False
            else:
                key = (min(x, y), max(x, y))
                out = strash.get(key)
                if out is None:
                    out = pool.new(Role.INTERNAL, f"g{v}")
                    internals.append(out)
                    gates.append(Gate("and", out, key))
                    strash[key] = out
                mapped[v] = out

    next_gates = []
    for (lit, nxt, _), s_next in zip(aig.latches, nexts):
        m = get(nxt)
        if isinstance(m, bool):
            next_gates.append(Gate("const", s_next, (), m))
        else:
            next_gates.append(Gate("buf", s_next, (m,)))
    try:
        bad = get(aig.property_literal())
    except aiger.AigerError as e:
        raise ModelError(str(e)) from None
    all_gates = gates + next_gates
    circuit = Circuit(latches + inputs, all_gates)
    ordered = circuit.topological()
    T = CnfFormula(pool)
    for g in _cone(ordered, [g.out for g in next_gates]):
        T.extend(gate_clauses(g))
    reset: list[bool | None] = []
    I = CnfFormula(pool)
    for (lit, _, r), s in zip(aig.latches, latches):
        if r == lit:
            reset.append(None)
        else:
            reset.append(bool(r))
            I.add((_lit(s, bool(r)),))
    if isinstance(bad, bool):
        P = CnfFormula(pool, [] if not bad else [()])
        not_P = CnfFormula(pool, [()] if not bad else [])
    else:
        defs = [c for g in _cone(ordered, [bad]) for c in gate_clauses(g)]
        P = CnfFormula(pool, defs + [(-bad,)])
        not_P = CnfFormula(pool, defs + [(bad,)])
    ts = TransitionSystem(pool, latches, nexts, inputs, internals, ordered, T, I, P, not_P,
                          bad, name=name, gate_count=len(aig.ands), reset=reset)
    if check:
        ts.check_init_implies_property()
    return ts


def parse_aiger(data: str | bytes, name: str = "model") -> TransitionSystem:
    try:
        aig = aiger.parse(data)
    except aiger.AigerError as e:
        raise ModelError(str(e)) from None
    return from_aig(aig, name)


def load_aiger(path, name: str | None = None) -> TransitionSystem:
    from pathlib import Path
    p = Path(path)
    return parse_aiger(p.read_bytes(), name or p.stem)


# --------------------------------------------------------------------------
# the abstract counter


@dataclass(frozen=True)
class CounterSpec:
    """k-bit counter; the property is val(s) < d.  ``seed`` None selects the
    standard binary encoding, an integer a seeded permutation of codes."""
    k: int
    d: int
    seed: int | None = None

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("counter width k must be positive")
        if not 0 < self.d < 2 ** self.k:
            raise ValueError(f"threshold d must satisfy 0 < d < 2^k, got d={self.d}, k={self.k}")

    @property
    def encoding(self) -> str:
        return "standard" if self.seed is None else "permuted"

    @property
    def name(self) -> str:
        enc = "std" if self.seed is None else f"perm{self.seed}"
        return f"counter_k{self.k}_d{self.d}_{enc}"

    @cached_property
    def codes(self) -> list[int]:
        """codes[v] is the state code holding value v."""
        codes = list(range(2 ** self.k))
        if self.seed is not None:
            random.Random(self.seed).shuffle(codes)
        return codes

    @cached_property
    def values(self) -> dict[int, int]:
        return {c: v for v, c in enumerate(self.codes)}

    def state_of(self, value: int) -> State:
        c = self.codes[value]
        return tuple(bool(c >> i & 1) for i in range(self.k))

    def value_of(self, state: State) -> int:
        return self.values[sum(1 << i for i, b in enumerate(state) if b)]


def counter_aig(spec: CounterSpec) -> Aig:
    b = AigBuilder()
    x = b.input("x")
    init = spec.codes[0]
    s = [b.latch(f"s{i + 1}", reset=init >> i & 1) for i in range(spec.k)]
    if spec.seed is None:
        carry = x
        for si in s:
            b.set_next(si, b.xor(si, carry))
            carry = b.and_(si, carry)
        # val(s) >= d, scanning from the least significant bit
        ge = 1
        for i, si in enumerate(s):
            ge = b.and_(si, ge) if spec.d >> i & 1 else b.or_(si, ge)
        bad = ge
    else:
        n = 2 ** spec.k

        def minterm(code: int) -> int:
            m = 1
            for i, si in enumerate(s):
                m = b.and_(m, si if code >> i & 1 else si ^ 1)
            return m

        codes = spec.codes
        for i, si in enumerate(s):
            inc = b.big_or(minterm(codes[v]) for v in range(n) if codes[(v + 1) % n] >> i & 1)
            b.set_next(si, b.mux(x, inc, si))
        bad = b.big_or(minterm(codes[v]) for v in range(spec.d, n))
    aig = b.finish(bad)
    aig.comments = [spec.name]
    return aig


def abstract_counter(spec: CounterSpec) -> TransitionSystem:
    return from_aig(counter_aig(spec), spec.name)


# --------------------------------------------------------------------------
# unrolling


class Unrolling:
    """Frame copies of a system's variables and formulas.

    Frame j maps S to S_j, X to X_j, Y to Y_j and S' to S_{j+1}.
    """

    def __init__(self, ts: TransitionSystem) -> None:
        self.ts = ts
        self.pool = ts.pool
        self._T: dict[int, CnfFormula] = {}
        self._cache: dict[tuple[int, int], tuple[CnfFormula, CnfFormula]] = {}

    def var(self, v: int, j: int) -> int:
        latch = self.ts.latch_of.get(v)
        if latch is not None:
            return self.pool.at_frame(latch, j + 1, Role.STATE)
        return self.pool.at_frame(v, j)

    def state_vars(self, j: int) -> list[int]:
        return [self.pool.at_frame(s, j) for s in self.ts.latches]

    def input_vars(self, j: int) -> list[int]:
        return [self.pool.at_frame(x, j) for x in self.ts.inputs]

    def at(self, formula: CnfFormula, j: int) -> CnfFormula:
        """``formula`` over base variables renamed into frame ``j``."""
        key = (id(formula), j)
        hit = self._cache.get(key)
        # the entry keeps the source alive, so a matching id means the same object
        if hit is not None and hit[0] is formula:
            return hit[1]
        out = rename_frame(formula, lambda v: self.var(v, j))
        self._cache[key] = (formula, out)
        return out

    def unroll(self, j: int) -> CnfFormula:
        if j < 0:
            raise ValueError("frame index must be non-negative")
        T = self._T.get(j)
        if T is None:
            T = self.at(self.ts.T, j)
            self._T[j] = T
        return T

    def to_base(self, formula: CnfFormula, j: int) -> CnfFormula:
        """Inverse renaming for formulas over frame-``j`` state and input variables."""
        back = {self.pool.at_frame(s, j): s for s in self.ts.latches}
        back.update({self.pool.at_frame(x, j): x for x in self.ts.inputs})
        return rename_frame(formula, back)


def build_phi(u: Unrolling, i: int, H: Sequence[CnfFormula],
              init: CnfFormula | None = None) -> CnfFormula:
    """I_0 and H_0, T_0, ..., H_{i-1}, T_{i-1} for frame-indexed H_m."""
    if len(H) != i:
        raise CnfError(f"expected {i} range reduction formulas, got {len(H)}")
    phi = u.at(init if init is not None else u.ts.I, 0).copy()
    for m in range(i):
        phi.extend(H[m])
        phi.extend(u.unroll(m))
    return phi


# --------------------------------------------------------------------------
# traces


@dataclass
class Trace:
    """States s_0..s_L and inputs x_0..x_{L-1}; an optional extra input
    witnesses badness of the last state."""
    states: list[State]
    inputs: list[tuple[bool, ...]]
    origin: int = 0  # frame index of states[0] in the original system

    @property
    def length(self) -> int:
        return len(self.states) - 1

    def __len__(self) -> int:
        return self.length

    def pairs(self):
        return list(zip(self.states, self.inputs))

    def to_json(self) -> list[dict]:
        out = []
        for j, s in enumerate(self.states):
            x = self.inputs[j] if j < len(self.inputs) else ()
            out.append({"state": "".join("1" if b else "0" for b in s),
                        "input": "".join("1" if b else "0" for b in x)})
        return out

    def stimulus(self, n_inputs: int) -> str:
        """AIGER witness stimulus: one line of input bits per frame."""
        lines = []
        for j in range(len(self.states)):
            x = self.inputs[j] if j < len(self.inputs) else (False,) * n_inputs
            lines.append("".join("1" if b else "0" for b in x))
        return "\n".join(lines) + "\n"


def replay(ts: TransitionSystem, trace: Trace, initialized: bool = True) -> list[str]:
    """Problems found when simulating ``trace`` as a counterexample; empty
    when it is an initialized path whose only bad state is the last."""
    errs = []
    if not trace.states:
        return ["empty trace"]
    if initialized:
        init = trace.states[0]
        if any(r is not None and r != b for r, b in zip(ts.reset, init)):
            errs.append("first state is not initial")
    for j, x in enumerate(trace.inputs[: trace.length]):
        nxt = ts.step(trace.states[j], x)
        if nxt != trace.states[j + 1]:
            errs.append(f"frame {j}: successor mismatch")
    for j, s in enumerate(trace.states[:-1]):
        if ts.is_bad(s):
            errs.append(f"frame {j}: intermediate state is bad")
    last = trace.states[-1]
    if len(trace.inputs) > trace.length:
        if not ts.bad_under(last, trace.inputs[-1]):
            errs.append("last state is not bad under the witness input")
    elif not ts.is_bad(last):
        errs.append("last state is not bad")
    return errs
