"""ASCII AIGER (``aag``) reading and writing, plus a structurally hashed
and-inverter graph builder used by the model generators."""

from __future__ import annotations

from dataclasses import dataclass, field


class AigerError(ValueError):
    pass


@dataclass
class Aig:
    max_var: int = 0
    inputs: list[int] = field(default_factory=list)
    latches: list[tuple[int, int, int]] = field(default_factory=list)  # (lit, next, reset)
    outputs: list[int] = field(default_factory=list)
    bad: list[int] = field(default_factory=list)
    ands: list[tuple[int, int, int]] = field(default_factory=list)
    symbols: dict[str, str] = field(default_factory=dict)  # e.g. "i0" -> "x"
    comments: list[str] = field(default_factory=list)

    def property_literal(self) -> int:
        """The literal that is 1 in bad states."""
        if len(self.bad) > 1 or (not self.bad and len(self.outputs) > 1):
            raise AigerError("multiple properties are not supported")
        if self.bad:
            return self.bad[0]
        if self.outputs:
            return self.outputs[0]
        raise AigerError("model has no output or bad-state property")

    def to_ascii(self) -> str:
        lines = [f"aag {self.max_var} {len(self.inputs)} {len(self.latches)} "
                 f"{len(self.outputs)} {len(self.ands)}"
                 + (f" {len(self.bad)}" if self.bad else "")]
        lines += [str(i) for i in self.inputs]
        for lit, nxt, reset in self.latches:
            lines.append(f"{lit} {nxt}" if reset == 0 else f"{lit} {nxt} {reset}")
        lines += [str(o) for o in self.outputs]
        lines += [str(b) for b in self.bad]
        lines += [f"{l} {a} {b}" for l, a, b in self.ands]
        for key in sorted(self.symbols, key=lambda k: (k[0], int(k[1:]))):
            lines.append(f"{key} {self.symbols[key]}")
        if self.comments:
            lines.append("c")
            lines += self.comments
        return "\n".join(lines) + "\n"


def parse(text: str | bytes) -> Aig:
    """Parse ASCII AIGER 1.9 with at most one property."""
    if isinstance(text, bytes):
        if text.startswith(b"aig "):
            raise AigerError("binary AIGER unsupported")
        try:
            text = text.decode("ascii")
        except UnicodeDecodeError as e:
            raise AigerError("input is not ASCII AIGER") from e
    if text.startswith("aig "):
        raise AigerError("binary AIGER unsupported")
    lines = text.splitlines()
    if not lines:
        raise AigerError("line 1: empty input")
    head = lines[0].split()
    if len(head) < 6 or head[0] != "aag":
        raise AigerError(f"line 1: malformed header {lines[0]!r}")
    try:
        nums = [int(x) for x in head[1:]]
    except ValueError:
        raise AigerError(f"line 1: malformed header {lines[0]!r}") from None
    if len(nums) > 9 or any(n < 0 for n in nums):
        raise AigerError(f"line 1: malformed header {lines[0]!r}")
    M, I, L, O, A = nums[:5]
    B, C, J, F = (nums[5:] + [0, 0, 0, 0])[:4]
    if C or J or F:
        raise AigerError("line 1: invariant constraints, justice and fairness are unsupported")
    if I + L + A > M:
        raise AigerError(f"line 1: M={M} smaller than I+L+A={I + L + A}")
    aig = Aig(max_var=M)
    pos = 1
    max_lit = 2 * M + 1

    def take(what: str) -> tuple[int, list[int]]:
        nonlocal pos
        if pos >= len(lines):
            raise AigerError(f"line {pos + 1}: unexpected end of file, expected {what}")
        lineno = pos + 1
        try:
            vals = [int(x) for x in lines[pos].split()]
        except ValueError:
            raise AigerError(f"line {lineno}: malformed {what} {lines[pos]!r}") from None
        pos += 1
        for v in vals:
            if v < 0 or v > max_lit:
                raise AigerError(f"line {lineno}: literal {v} out of range for M={M}")
        return lineno, vals

    defined: dict[int, int] = {}
    for _ in range(I):
        ln, v = take("input")
        if len(v) != 1 or v[0] < 2 or v[0] & 1:
            raise AigerError(f"line {ln}: bad input literal")
        if v[0] >> 1 in defined:
            raise AigerError(f"line {ln}: variable {v[0] >> 1} defined twice")
        defined[v[0] >> 1] = ln
        aig.inputs.append(v[0])
    for _ in range(L):
        ln, v = take("latch")
        if len(v) not in (2, 3) or v[0] < 2 or v[0] & 1:
            raise AigerError(f"line {ln}: bad latch line")
        reset = v[2] if len(v) == 3 else 0
        if reset not in (0, 1, v[0]):
            raise AigerError(f"line {ln}: latch reset must be 0, 1 or the latch literal")
        if v[0] >> 1 in defined:
            raise AigerError(f"line {ln}: variable {v[0] >> 1} defined twice")
        defined[v[0] >> 1] = ln
        aig.latches.append((v[0], v[1], reset))
    out_lines = []
    for _ in range(O):
        ln, v = take("output")
        if len(v) != 1:
            raise AigerError(f"line {ln}: bad output line")
        aig.outputs.append(v[0])
        out_lines.append((ln, v[0]))
    for _ in range(B):
        ln, v = take("bad")
        if len(v) != 1:
            raise AigerError(f"line {ln}: bad bad-state line")
        aig.bad.append(v[0])
        out_lines.append((ln, v[0]))
    for _ in range(A):
        ln, v = take("and gate")
        if len(v) != 3 or v[0] < 2 or v[0] & 1:
            raise AigerError(f"line {ln}: bad and gate")
        if v[0] >> 1 in defined:
            raise AigerError(f"line {ln}: variable {v[0] >> 1} defined twice")
        defined[v[0] >> 1] = ln
        aig.ands.append((v[0], v[1], v[2]))
    # every referenced literal must be defined
    for lit, nxt, _ in aig.latches:
        if nxt > 1 and nxt >> 1 not in defined:
            raise AigerError(f"line {defined[lit >> 1]}: dangling literal {nxt}")
    for ln, lit in out_lines:
        if lit > 1 and lit >> 1 not in defined:
            raise AigerError(f"line {ln}: dangling literal {lit}")
    for lhs, a, b in aig.ands:
        for x in (a, b):
            if x > 1 and x >> 1 not in defined:
                raise AigerError(f"line {defined[lhs >> 1]}: dangling literal {x}")
    while pos < len(lines):
        line = lines[pos]
        pos += 1
        if line == "c":
            aig.comments = lines[pos:]
            break
        parts = line.split(" ", 1)
        if len(parts) == 2 and parts[0][:1] in "ilob" and parts[0][1:].isdigit():
            aig.symbols[parts[0]] = parts[1]
        elif line.strip():
            raise AigerError(f"line {pos}: unexpected content {line!r}")
    return aig


class AigBuilder:
    """Builds an :class:`Aig` with constant folding and structural hashing."""

    def __init__(self) -> None:
        self.aig = Aig()
        self._strash: dict[tuple[int, int], int] = {}
        self._next: dict[int, int] = {}

    def _new_var(self) -> int:
        self.aig.max_var += 1
        return 2 * self.aig.max_var

    def input(self, name: str | None = None) -> int:
        lit = self._new_var()
        if name:
            self.aig.symbols[f"i{len(self.aig.inputs)}"] = name
        self.aig.inputs.append(lit)
        return lit

    def latch(self, name: str | None = None, reset: int = 0) -> int:
        lit = self._new_var()
        if name:
            self.aig.symbols[f"l{len(self.aig.latches)}"] = name
        self.aig.latches.append((lit, 0, reset))
        return lit

    def set_next(self, latch: int, nxt: int) -> None:
        self._next[latch] = nxt

    def and_(self, a: int, b: int) -> int:
        if a == 0 or b == 0 or a == b ^ 1:
            return 0
        if a == 1:
            return b
        if b == 1 or a == b:
            return a
        key = (min(a, b), max(a, b))
        lit = self._strash.get(key)
        if lit is None:
            lit = self._new_var()
            self.aig.ands.append((lit, key[1], key[0]))
            self._strash[key] = lit
        return lit

    def or_(self, a: int, b: int) -> int:
        return self.and_(a ^ 1, b ^ 1) ^ 1

    def xor(self, a: int, b: int) -> int:
        return self.or_(self.and_(a, b ^ 1), self.and_(a ^ 1, b))

    def mux(self, sel: int, hi: int, lo: int) -> int:
        return self.or_(self.and_(sel, hi), self.and_(sel ^ 1, lo))

    def big_or(self, lits) -> int:
        out = 0
        for l in lits:
            out = self.or_(out, l)
        return out

    def finish(self, bad: int) -> Aig:
        self.aig.latches = [(lit, self._next.get(lit, 0), r) for lit, _, r in self.aig.latches]
        self.aig.bad = []
        self.aig.outputs = [bad]
        return self.aig
