"""CNF formulas over a shared variable pool.

Literals are signed integers in the DIMACS convention: ``v`` is the positive
literal of variable ``v`` and ``-v`` its negation.  Every variable is
registered in a :class:`VariablePool` together with its role and, for copies
living in an unrolled time frame, the frame index.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Mapping, Sequence, TextIO

Lit = int
Clause = tuple  # tuple[Lit, ...], sorted by variable id


class Role(str, enum.Enum):
    STATE = "state"
    NEXT = "next-state"
    INPUT = "input"
    INTERNAL = "internal"
    AUX = "auxiliary"


@dataclass(frozen=True)
class Variable:
    id: int
    role: Role
    frame: int | None = None
    name: str | None = None
    base: int | None = None  # untimed variable this is a frame copy of


class CnfError(ValueError):
    pass


class EncodingError(CnfError):
    """Raised for cyclic circuits."""


class StructuralError(CnfError):
    """Raised for references to undeclared wires."""


class VariablePool:
    """Allocates variable ids and remembers per-frame copies."""

    def __init__(self) -> None:
        self._vars: list[Variable | None] = [None]
        self._frame_copies: dict[tuple[int, int], int] = {}

    def new(self, role: Role | str, name: str | None = None,
            frame: int | None = None, base: int | None = None) -> int:
        vid = len(self._vars)
        self._vars.append(Variable(vid, Role(role), frame, name, base))
        return vid

    def at_frame(self, base: int, frame: int, role: Role | str | None = None) -> int:
        key = (base, frame)
        vid = self._frame_copies.get(key)
        if vid is None:
            src = self[base]
            name = f"{src.name or 'v' + str(base)}@{frame}"
            vid = self.new(role or src.role, name, frame, base)
            self._frame_copies[key] = vid
        return vid

    def __getitem__(self, vid: int) -> Variable:
        if vid <= 0 or vid >= len(self._vars):
            raise KeyError(vid)
        return self._vars[vid]

    def __contains__(self, vid: int) -> bool:
        return 0 < vid < len(self._vars)

    def __len__(self) -> int:
        return len(self._vars) - 1

    @property
    def max_id(self) -> int:
        return len(self._vars) - 1

    def name(self, vid: int) -> str:
        v = self[vid]
        return v.name or f"v{vid}"


def make_clause(lits: Iterable[Lit]) -> Clause:
    """Canonical clause: duplicates removed, sorted by variable id.

    Raises CnfError on a tautology or a zero literal.
    """
    s = set(lits)
    if 0 in s:
        raise CnfError("literal 0 is not a valid literal")
    for lit in s:
        if -lit in s:
            raise CnfError(f"tautological clause on variable {abs(lit)}")
    return tuple(sorted(s, key=lambda l: (abs(l), l)))


def negate_cube(lits: Iterable[Lit]) -> Clause:
    """The clause falsified exactly by the given cube."""
    return make_clause(-l for l in lits)


class CnfFormula:
    """A conjunction of clauses.  The empty formula is true."""

    __slots__ = ("pool", "_clauses", "_seen")

    def __init__(self, pool: VariablePool, clauses: Iterable[Iterable[Lit]] = ()) -> None:
        self.pool = pool
        self._clauses: list[Clause] = []
        self._seen: set[Clause] = set()
        for c in clauses:
            self.add(c)

    def add(self, lits: Iterable[Lit]) -> Clause:
        c = lits if type(lits) is tuple and _is_canonical(lits) else make_clause(lits)
        for lit in c:
            if abs(lit) not in self.pool:
                raise CnfError(f"variable {abs(lit)} not registered in pool")
        if c not in self._seen:
            self._seen.add(c)
            self._clauses.append(c)
        return c

    def extend(self, clauses: Iterable[Iterable[Lit]]) -> "CnfFormula":
        for c in clauses:
            self.add(c)
        return self

    @property
    def clauses(self) -> list[Clause]:
        return self._clauses

    def __iter__(self) -> Iterator[Clause]:
        return iter(self._clauses)

    def __len__(self) -> int:
        return len(self._clauses)

    def __bool__(self) -> bool:
        # truthiness is "has clauses", mirroring list semantics
        return bool(self._clauses)

    def __and__(self, other: "CnfFormula") -> "CnfFormula":
        out = self.copy()
        out.extend(other)
        return out

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CnfFormula):
            return NotImplemented
        return self._seen == other._seen

    def __repr__(self) -> str:
        return f"CnfFormula({self._clauses!r})"

    def copy(self) -> "CnfFormula":
        out = CnfFormula(self.pool)
        out._clauses = list(self._clauses)
        out._seen = set(self._seen)
        return out

    def variables(self) -> set[int]:
        return {abs(l) for c in self._clauses for l in c}

    def is_empty(self) -> bool:
        return not self._clauses

    def has_empty_clause(self) -> bool:
        return () in self._seen

    def clause_set(self) -> frozenset[Clause]:
        return frozenset(self._seen)


def _is_canonical(c: tuple) -> bool:
    prev = 0
    for lit in c:
        v = abs(lit)
        if v <= prev:
            return False
        prev = v
    return True


# --------------------------------------------------------------------------
# circuits and Tseitin encoding


@dataclass(frozen=True)
class Gate:
    """A gate driving variable ``out``.

    ``kind`` is one of ``and`` (conjunction of the input literals), ``not``
    (single input, negated), ``buf`` (single input, copied) or ``const``
    (``value`` holds the constant, no inputs).
    """
    kind: str
    out: int
    inputs: tuple = ()
    value: bool = False


@dataclass
class Circuit:
    inputs: list[int]
    gates: list[Gate] = field(default_factory=list)

    def topological(self) -> list[Gate]:
        """Gates ordered so every gate follows its drivers."""
        known = set(self.inputs)
        drivers = {}
        for g in self.gates:
            if g.out in drivers:
                raise StructuralError(f"wire {g.out} driven twice")
            if g.out in known:
                raise StructuralError(f"wire {g.out} is both input and gate output")
            drivers[g.out] = g
        for g in self.gates:
            for lit in g.inputs:
                if abs(lit) not in known and abs(lit) not in drivers:
                    raise StructuralError(f"gate {g.out} reads undeclared wire {abs(lit)}")
        order: list[Gate] = []
        state: dict[int, int] = {}  # 1 visiting, 2 done
        for g in self.gates:
            if state.get(g.out) == 2:
                continue
            stack = [(g, iter(g.inputs))]
            state[g.out] = 1
            while stack:
                gate, it = stack[-1]
                for lit in it:
                    d = drivers.get(abs(lit))
                    if d is None:
                        continue
                    st = state.get(d.out)
                    if st == 1:
                        raise EncodingError(f"combinational cycle through wire {d.out}")
                    if st is None:
                        state[d.out] = 1
                        stack.append((d, iter(d.inputs)))
                        break
                else:
                    stack.pop()
                    state[gate.out] = 2
                    order.append(gate)
        return order

    def simulate(self, values: Mapping[int, bool]) -> dict[int, bool]:
        """Evaluate every wire given values for the primary inputs."""
        val = dict(values)
        for g in self.topological():
            val[g.out] = _eval_gate(g, val)
        return val


def _lit_value(lit: Lit, val: Mapping[int, bool]) -> bool:
    b = val[abs(lit)]
    return b if lit > 0 else not b


def _eval_gate(g: Gate, val: Mapping[int, bool]) -> bool:
    if g.kind == "and":
        return all(_lit_value(l, val) for l in g.inputs)
    if g.kind == "not":
        return not _lit_value(g.inputs[0], val)
    if g.kind == "buf":
        return _lit_value(g.inputs[0], val)
    if g.kind == "const":
        return bool(g.value)
    raise CnfError(f"unknown gate kind {g.kind!r}")


def gate_clauses(g: Gate) -> list[Clause]:
    z = g.out
    if g.kind == "and":
        ins = set(g.inputs)
        if any(-l in ins for l in ins):
            return [(-z,)]
        clauses = [make_clause((-z, a)) for a in sorted(ins, key=abs)]
        clauses.append(make_clause([z] + [-a for a in ins]))
        return clauses
    if g.kind in ("not", "buf"):
        (a,) = g.inputs
        a = -a if g.kind == "not" else a
        return [make_clause((-z, a)), make_clause((z, -a))]
    if g.kind == "const":
        return [(z,) if g.value else (-z,)]
    raise CnfError(f"unknown gate kind {g.kind!r}")


def tseitin_encode(circuit: Circuit, pool: VariablePool) -> CnfFormula:
    """CNF satisfied by an assignment iff every gate output equals its gate
    function of the inputs."""
    out = CnfFormula(pool)
    for g in circuit.topological():
        for c in gate_clauses(g):
            out.add(c)
    return out


# --------------------------------------------------------------------------
# renaming, evaluation, negation


def rename_frame(formula: CnfFormula,
                 frame_map: Mapping[int, int] | Callable[[int], int]) -> CnfFormula:
    """Rename variables of ``formula``; polarity is preserved.

    A mapping must cover every variable of the formula and be injective on
    it; a callable is trusted to be injective.
    """
    if callable(frame_map) and not isinstance(frame_map, Mapping):
        f = frame_map
    else:
        m = frame_map
        vs = formula.variables()
        missing = [v for v in vs if v not in m]
        if missing:
            raise CnfError(f"frame map undefined on variables {sorted(missing)[:5]}")
        images = {m[v] for v in vs}
        if len(images) != len(vs):
            raise CnfError("frame map is not injective on the formula's variables")
        f = m.__getitem__
    out = CnfFormula(formula.pool)
    for c in formula:
        out.add(tuple(f(l) if l > 0 else -f(-l) for l in c))
    return out


def evaluate(formula: CnfFormula | Iterable[Clause], assignment: Mapping[int, bool]) -> bool | None:
    """True if every clause is satisfied, False if some clause is falsified,
    None otherwise."""
    undetermined = False
    for c in formula:
        sat = False
        open_ = False
        for lit in c:
            b = assignment.get(abs(lit))
            if b is None:
                open_ = True
            elif b == (lit > 0):
                sat = True
                break
        if sat:
            continue
        if not open_:
            return False
        undetermined = True
    return None if undetermined else True


def negate_to_cnf(formula: CnfFormula, role: Role = Role.AUX) -> CnfFormula:
    """CNF whose projection onto the formula's variables is its negation.

    Each non-unit clause gets a fresh selector implying that the clause is
    falsified; one top clause requires some clause to be falsified.
    """
    pool = formula.pool
    out = CnfFormula(pool)
    top: list[Lit] = []
    for c in formula:
        if len(c) == 1:
            top.append(-c[0])
            continue
        if not c:
            # an empty clause is always falsified: the negation is true
            return CnfFormula(pool)
        a = pool.new(role, name="neg")
        for lit in c:
            out.add(make_clause((-a, -lit)))
        top.append(a)
    top_set = set(top)
    if any(-l in top_set for l in top_set):
        return CnfFormula(pool)  # complementary units: the negation is true
    out.add(make_clause(top_set))
    return out


# --------------------------------------------------------------------------
# DIMACS


def write_dimacs(formula: CnfFormula | Sequence[Clause], fh: TextIO, num_vars: int | None = None,
                 comments: Sequence[str] = ()) -> None:
    clauses = list(formula)
    if num_vars is None:
        num_vars = max((abs(l) for c in clauses for l in c), default=0)
        if isinstance(formula, CnfFormula):
            num_vars = max(num_vars, formula.pool.max_id)
    for line in comments:
        fh.write(f"c {line}\n")
    fh.write(f"p cnf {num_vars} {len(clauses)}\n")
    for c in clauses:
        fh.write(" ".join(map(str, c)) + (" 0\n" if c else "0\n"))


def read_dimacs(fh: TextIO, pool: VariablePool | None = None,
                role: Role = Role.AUX) -> CnfFormula:
    """Read a DIMACS CNF.  Missing variables are registered in ``pool``."""
    pool = pool if pool is not None else VariablePool()
    declared = None
    lits: list[int] = []
    raw: list[list[int]] = []
    for lineno, line in enumerate(fh, 1):
        line = line.strip()
        if not line or line[0] == "c" or line[0] == "%":
            continue
        if line[0] == "p":
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise CnfError(f"line {lineno}: malformed header {line!r}")
            declared = (int(parts[2]), int(parts[3]))
            continue
        for tok in line.split():
            v = int(tok)
            if v == 0:
                raw.append(lits)
                lits = []
            else:
                lits.append(v)
    if lits:
        raw.append(lits)
    if declared is None:
        raise CnfError("missing 'p cnf' header")
    top = max([declared[0]] + [abs(l) for c in raw for l in c])
    while pool.max_id < top:
        pool.new(role)
    f = CnfFormula(pool)
    for c in raw:
        f.add(c)
    return f
