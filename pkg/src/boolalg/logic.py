"""Propositional formulas and n-ary interpolation through the free algebra.

A formula over variables ``order`` is identified with its set of satisfying
assignments, a subset of ``{0 .. 2^k - 1}`` where bit ``v`` of a point is
the value of ``order[v]``.  The free algebra on the variables is then the
whole powerset, and the subalgebra generated by a set of variables consists
of the formulas depending only on them.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .core import Element, InternalCheckError, generate_subalgebra, upper_projection

MAX_VARS = 20
CORE_PATH_LIMIT = 4096


class FormulaSyntaxError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class SatisfiableInput(ValueError):
    """The conjunction of the inputs has a model, so no interpolants exist."""

    def __init__(self, model: dict[str, bool]):
        self.model = model
        shown = ", ".join(f"{k}={int(v)}" for k, v in model.items())
        super().__init__(f"satisfiable input; model: {shown}")


class TooManyVariables(ValueError):
    pass


# -- syntax ------------------------------------------------------------------


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
    value: bool


@dataclass(frozen=True)
class Not:
    arg: "Formula"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Implies:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Iff:
    left: "Formula"
    right: "Formula"


Formula = Union[Var, Const, Not, And, Or, Implies, Iff]

TOP = Const(True)
BOTTOM = Const(False)

_TOKEN = re.compile(r"\s*(?:(<->)|(->)|([!&|()])|([A-Za-z_][A-Za-z0-9_]*)|([01])\b)")


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        match = _TOKEN.match(text, pos)
        if not match or match.end() == pos:
            raise FormulaSyntaxError(f"unexpected character {text[pos]!r}", pos)
        start = match.start(match.lastindex)
        value = match.group(match.lastindex)
        if match.lastindex == 4:
            kind = "const" if value in ("true", "false") else "var"
        elif match.lastindex == 5:
            kind = "const"
        else:
            kind = value
        tokens.append((kind, value, start))
        pos = match.end()
    tokens.append(("eof", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.pos]

    def take(self, kind: str) -> tuple[str, str, int]:
        tok = self.peek()
        if tok[0] != kind:
            what = "end of input" if tok[0] == "eof" else repr(tok[1])
            raise FormulaSyntaxError(f"expected {kind!r}, found {what}", tok[2])
        self.pos += 1
        return tok

    def parse(self) -> Formula:
        f = self.iff()
        self.take("eof")
        return f

    def iff(self) -> Formula:
        f = self.implies()
        while self.peek()[0] == "<->":
            self.pos += 1
            f = Iff(f, self.implies())
        return f

    def implies(self) -> Formula:
        f = self.disj()
        if self.peek()[0] == "->":
            self.pos += 1
            return Implies(f, self.implies())
        return f

    def disj(self) -> Formula:
        f = self.conj()
        while self.peek()[0] == "|":
            self.pos += 1
            f = Or(f, self.conj())
        return f

    def conj(self) -> Formula:
        f = self.unary()
        while self.peek()[0] == "&":
            self.pos += 1
            f = And(f, self.unary())
        return f

    def unary(self) -> Formula:
        kind, value, offset = self.peek()
        if kind == "!":
            self.pos += 1
            return Not(self.unary())
        if kind == "(":
            self.pos += 1
            f = self.iff()
            self.take(")")
            return f
        if kind == "var":
            self.pos += 1
            return Var(value)
        if kind == "const":
            self.pos += 1
            return Const(value in ("1", "true"))
        what = "end of input" if kind == "eof" else repr(value)
        raise FormulaSyntaxError(f"expected a formula, found {what}", offset)


def parse(text: str) -> Formula:
    """Parse ASCII syntax: ``!`` binds tightest, then ``&``, ``|``, ``->`` (right), ``<->``."""
    return _Parser(text).parse()


_PREC = {Iff: 1, Implies: 2, Or: 3, And: 4, Not: 5, Var: 6, Const: 6}
_SYMBOL = {Iff: "<->", Implies: "->", Or: "|", And: "&"}


def to_text(f: Formula) -> str:
    """Print with the minimum parentheses needed to parse back to the same tree."""
    if isinstance(f, Var):
        return f.name
    if isinstance(f, Const):
        return "true" if f.value else "false"
    if isinstance(f, Not):
        inner = to_text(f.arg)
        return "!" + (inner if _PREC[type(f.arg)] >= _PREC[Not] else f"({inner})")
    prec = _PREC[type(f)]
    right_assoc = isinstance(f, Implies)
    left_needs = _PREC[type(f.left)] < prec or (right_assoc and _PREC[type(f.left)] == prec)
    right_needs = _PREC[type(f.right)] < prec or (not right_assoc and _PREC[type(f.right)] == prec)
    left = f"({to_text(f.left)})" if left_needs else to_text(f.left)
    right = f"({to_text(f.right)})" if right_needs else to_text(f.right)
    return f"{left} {_SYMBOL[type(f)]} {right}"


def variables(f: Formula) -> set[str]:
    if isinstance(f, Var):
        return {f.name}
    if isinstance(f, Const):
        return set()
    if isinstance(f, Not):
        return variables(f.arg)
    return variables(f.left) | variables(f.right)


# -- semantics ---------------------------------------------------------------


def _columns(order: Sequence[str]) -> dict[str, np.ndarray]:
    points = np.arange(1 << len(order), dtype=np.int64)
    return {name: (points >> v & 1).astype(bool) for v, name in enumerate(order)}


def _eval(f: Formula, cols: dict[str, np.ndarray], size: int) -> np.ndarray:
    if isinstance(f, Var):
        return cols[f.name]
    if isinstance(f, Const):
        return np.full(size, f.value, dtype=bool)
    if isinstance(f, Not):
        return ~_eval(f.arg, cols, size)
    a, b = _eval(f.left, cols, size), _eval(f.right, cols, size)
    if isinstance(f, And):
        return a & b
    if isinstance(f, Or):
        return a | b
    if isinstance(f, Implies):
        return ~a | b
    return a == b


def _check_order(order: Sequence[str]) -> None:
    if len(order) > MAX_VARS:
        raise TooManyVariables(f"{len(order)} variables, at most {MAX_VARS} supported")
    if len(set(order)) != len(order):
        raise ValueError("repeated variable in order")


def truth_table(f: Formula, order: Sequence[str]) -> np.ndarray:
    _check_order(order)
    unknown = variables(f) - set(order)
    if unknown:
        raise ValueError(f"unknown variables {sorted(unknown)}")
    return _eval(f, _columns(order), 1 << len(order))


def _bits_of(table: np.ndarray) -> int:
    return int.from_bytes(np.packbits(table, bitorder="little").tobytes(), "little")


def _table_of(bits: int, size: int) -> np.ndarray:
    raw = np.frombuffer(bits.to_bytes((size + 7) // 8, "little"), dtype=np.uint8)
    return np.unpackbits(raw, bitorder="little")[:size].astype(bool)


def formula_to_element(f: Formula, order: Sequence[str]) -> Element:
    table = truth_table(f, order)
    return Element(len(table), _bits_of(table))


def _support(table: np.ndarray, k: int) -> list[int]:
    """Variables the table actually depends on."""
    out = []
    for v in range(k):
        shaped = table.reshape(-1, 2, 1 << v)
        if not np.array_equal(shaped[:, 0, :], shaped[:, 1, :]):
            out.append(v)
    return out


def _prime_implicants(minterms: set[int], k: int) -> list[tuple[int, int]]:
    """Prime implicants as ``(value, care_mask)`` pairs (Quine-McCluskey)."""
    full = (1 << k) - 1
    current = {(p, full) for p in minterms}
    primes = set()
    while current:
        merged = set()
        used = set()
        by_mask: dict[int, set[int]] = {}
        for value, care in current:
            by_mask.setdefault(care, set()).add(value)
        for care, values in by_mask.items():
            for value in values:
                for v in range(k):
                    bit = 1 << v
                    if care & bit and not value & bit and value | bit in values:
                        merged.add((value, care & ~bit))
                        used.add((value, care))
                        used.add((value | bit, care))
        primes |= current - used
        current = merged
    return sorted(primes)


def _covers(imp: tuple[int, int], p: int) -> bool:
    value, care = imp
    return p & care == value


def _cover(minterms: set[int], primes: list[tuple[int, int]]) -> list[tuple[int, int]]:
    uncovered = set(minterms)
    chosen = []
    while uncovered:
        best = max(primes, key=lambda imp: (sum(_covers(imp, p) for p in uncovered), -bin(imp[1]).count("1")))
        chosen.append(best)
        uncovered = {p for p in uncovered if not _covers(best, p)}
    # drop terms made redundant by later choices
    for imp in list(chosen):
        rest = [c for c in chosen if c != imp]
        if all(any(_covers(c, p) for c in rest) for p in minterms):
            chosen = rest
    return chosen


def _conj(parts: list[Formula]) -> Formula:
    out = parts[0]
    for p in parts[1:]:
        out = And(out, p)
    return out


def _disj(parts: list[Formula]) -> Formula:
    out = parts[0]
    for p in parts[1:]:
        out = Or(out, p)
    return out


def element_to_formula(x: Element, order: Sequence[str]) -> Formula:
    """Irredundant DNF over the variables ``x`` depends on."""
    _check_order(order)
    k = len(order)
    if x.ground != 1 << k:
        raise ValueError(f"element over {x.ground} points, expected {1 << k}")
    if x.bits == 0:
        return BOTTOM
    if x.bits == (1 << x.ground) - 1:
        return TOP
    table = _table_of(x.bits, x.ground)
    support = _support(table, k)
    # project onto the support: index by the support bits only
    points = np.flatnonzero(table)
    reduced = set()
    for p in points.tolist():
        r = 0
        for pos, v in enumerate(support):
            r |= (p >> v & 1) << pos
        reduced.add(r)
    primes = _prime_implicants(reduced, len(support))
    terms = []
    for value, care in _cover(reduced, primes):
        lits: list[Formula] = []
        for pos, v in enumerate(support):
            if care >> pos & 1:
                lits.append(Var(order[v]) if value >> pos & 1 else Not(Var(order[v])))
        terms.append(_conj(lits) if lits else TOP)
    return _disj(terms)


# -- interpolation -----------------------------------------------------------


def _generator(v: int, k: int) -> int:
    points = np.arange(1 << k, dtype=np.int64)
    return _bits_of((points >> v & 1).astype(bool))


def _project_core(x: Element, shared: Sequence[int], k: int) -> Element:
    D = generate_subalgebra(1 << k, [_generator(v, k) for v in shared])
    return upper_projection(D, x)


def _project_exists(table: np.ndarray, shared: Sequence[int], k: int) -> np.ndarray:
    """Existentially quantify every variable outside ``shared``."""
    out = table.copy()
    for v in range(k):
        if v in shared:
            continue
        shaped = out.reshape(-1, 2, 1 << v)
        merged = shaped[:, 0, :] | shaped[:, 1, :]
        shaped[:, 0, :] = merged
        shaped[:, 1, :] = merged
    return out


def interpolants(phis: Sequence[Formula], *, order: Optional[Sequence[str]] = None) -> list[Formula]:
    """Least interpolants ``psi_i`` for a jointly unsatisfiable tuple ``phis``.

    ``psi_i`` is the least formula above ``phi_i`` using only variables that
    ``phi_i`` shares with some other input.  Raises :class:`SatisfiableInput`
    when the conjunction has a model.
    """
    phis = list(phis)
    if not phis:
        raise ValueError("need at least one formula")
    H = [variables(f) for f in phis]
    order = sorted(set().union(*H)) if order is None else list(order)
    _check_order(order)
    k = len(order)
    size = 1 << k
    cols = _columns(order)
    tables = [_eval(f, cols, size) for f in phis]
    meet = np.logical_and.reduce(tables)
    if meet.any():
        p = int(np.flatnonzero(meet)[0])
        raise SatisfiableInput({name: bool(p >> v & 1) for v, name in enumerate(order)})
    index = {name: v for v, name in enumerate(order)}
    out = []
    for i, table in enumerate(tables):
        others = set().union(*(H[j] for j in range(len(phis)) if j != i))
        shared = sorted(index[name] for name in H[i] & others)
        projected = _project_exists(table, shared, k)
        y = Element(size, _bits_of(projected))
        if size <= CORE_PATH_LIMIT:
            core = _project_core(Element(size, _bits_of(table)), shared, k)
            if core != y:
                raise InternalCheckError("subalgebra projection and quantifier elimination disagree")
        out.append(element_to_formula(y, order))
    _check_interpolants(phis, out, order, H)
    return out


def _check_interpolants(phis, psis, order, H) -> None:
    cols = _columns(order)
    size = 1 << len(order)
    joint = np.ones(size, dtype=bool)
    for i, (phi, psi) in enumerate(zip(phis, psis)):
        a, b = _eval(phi, cols, size), _eval(psi, cols, size)
        if (a & ~b).any():
            raise InternalCheckError(f"input {i} does not entail its interpolant")
        others = set().union(*(H[j] for j in range(len(phis)) if j != i))
        if not variables(psi) <= H[i] & others:
            raise InternalCheckError(f"interpolant {i} uses a variable it may not")
        joint &= b
    if joint.any():
        raise InternalCheckError("interpolants are jointly satisfiable")
