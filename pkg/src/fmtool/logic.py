"""Propositional formulas for feature models.

Compiles relations and cross-tree constraints to formulas, evaluates them
(on single configurations or, vectorised, on whole batches of them), and
converts formulas to CNF with a definitional transformation.
"""

from __future__ import annotations

import enum
import functools
import itertools
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Mapping, Optional, Sequence, Union

from .model import (ConstraintKind, CrossTreeConstraint, Configuration, Element,
                    FeatureModel, Relation, RelationType)

if TYPE_CHECKING:
    import numpy as np


class SemanticsMode(enum.Enum):
    STRICT = "strict"
    PAPER_LITERAL = "paper-literal"


# -- AST ---------------------------------------------------------------------

class Formula:
    __slots__ = ()

    def variables(self) -> list[str]:
        """Variable names in preorder of first occurrence."""
        seen: dict[str, None] = {}
        stack = [self]
        while stack:
            node = stack.pop()
            if isinstance(node, Var):
                seen.setdefault(node.name)
            else:
                stack.extend(reversed(node.operands))
        return list(seen)


@dataclass(frozen=True)
class Var(Formula):
    name: str

    operands = ()

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Not(Formula):
    arg: Formula

    @property
    def operands(self):
        return (self.arg,)

    def __str__(self):
        return f"!{_wrap(self.arg)}"


@dataclass(frozen=True)
class And(Formula):
    items: tuple[Formula, ...]

    def __init__(self, *items):
        if len(items) == 1 and not isinstance(items[0], Formula):
            items = tuple(items[0])
        if not items:
            raise ValueError("And needs at least one operand")
        object.__setattr__(self, "items", tuple(items))

    @property
    def operands(self):
        return self.items

    def __str__(self):
        return " & ".join(_wrap(f) for f in self.items)


@dataclass(frozen=True)
class Or(Formula):
    items: tuple[Formula, ...]

    def __init__(self, *items):
        if len(items) == 1 and not isinstance(items[0], Formula):
            items = tuple(items[0])
        if not items:
            raise ValueError("Or needs at least one operand")
        object.__setattr__(self, "items", tuple(items))

    @property
    def operands(self):
        return self.items

    def __str__(self):
        return " | ".join(_wrap(f) for f in self.items)


@dataclass(frozen=True)
class Implies(Formula):
    lhs: Formula
    rhs: Formula

    @property
    def operands(self):
        return (self.lhs, self.rhs)

    def __str__(self):
        return f"{_wrap(self.lhs)} => {_wrap(self.rhs)}"


@dataclass(frozen=True)
class Iff(Formula):
    lhs: Formula
    rhs: Formula

    @property
    def operands(self):
        return (self.lhs, self.rhs)

    def __str__(self):
        return f"{_wrap(self.lhs)} <=> {_wrap(self.rhs)}"


@dataclass(frozen=True)
class ExactlyOne(Formula):
    items: tuple[Formula, ...]

    def __init__(self, *items):
        if len(items) == 1 and not isinstance(items[0], Formula):
            items = tuple(items[0])
        if len(items) < 2:
            raise ValueError("ExactlyOne needs at least two operands")
        object.__setattr__(self, "items", tuple(items))

    @property
    def operands(self):
        return self.items

    def __str__(self):
        return "one(" + ", ".join(str(f) for f in self.items) + ")"


def _wrap(f: Formula) -> str:
    if isinstance(f, (Var, Not, ExactlyOne)):
        return str(f)
    if isinstance(f, (And, Or)) and len(f.items) == 1:
        return _wrap(f.items[0])
    return f"({f})"


def _vars(names: Iterable[str]) -> list[Var]:
    return [Var(n) for n in names]


# -- compilation -------------------------------------------------------------

def compile_relation(r: Relation, mode: SemanticsMode = SemanticsMode.STRICT) -> Formula:
    p = Var(r.parent)
    cs = _vars(r.children)
    t = r.rtype
    if t is RelationType.MANDATORY:
        return Iff(p, cs[0])
    if t is RelationType.OPTIONAL:
        return Implies(cs[0], p)
    if t is RelationType.ALTERNATIVE:
        base = Iff(p, ExactlyOne(cs))
    elif t is RelationType.OPTIONAL_ALTERNATIVE:
        base = Implies(ExactlyOne(cs), p)
    elif t is RelationType.OR:
        base = Iff(p, Or(cs))
    else:
        base = Implies(Or(cs), p)
    if mode is SemanticsMode.PAPER_LITERAL:
        return base
    parts: list[Formula] = [base]
    parts += [Implies(c, p) for c in cs]
    if t in (RelationType.ALTERNATIVE, RelationType.OPTIONAL_ALTERNATIVE):
        parts += [Not(And(a, b)) for a, b in itertools.combinations(cs, 2)]
    return And(parts)


def compile_constraint(c: CrossTreeConstraint) -> Formula:
    a, b = Var(c.source), Var(c.target)
    if c.kind is ConstraintKind.REQUIRES:
        return Implies(a, b)
    return Not(And(a, b))


@functools.lru_cache(maxsize=4096)
def compile_element(e: Element, mode: SemanticsMode = SemanticsMode.STRICT) -> Formula:
    if isinstance(e, Relation):
        return compile_relation(e, mode)
    return compile_constraint(e)


def compile_parts(m: FeatureModel, mode: SemanticsMode = SemanticsMode.STRICT,
                  elements: Optional[Sequence[Element]] = None) -> list[Formula]:
    """Root assertion followed by one formula per element (all by default)."""
    if elements is None:
        elements = m.elements
    return [Var(m.root)] + [compile_element(e, mode) for e in elements]


def compile_model(m: FeatureModel, mode: SemanticsMode = SemanticsMode.STRICT) -> And:
    return And(compile_parts(m, mode))


# -- evaluation --------------------------------------------------------------

class UndecidedVariable(ValueError):
    pass


def _truth(f: Formula, lookup) -> bool:
    # scalar twin of _eval; plain Python bools are much cheaper than numpy here
    if isinstance(f, Var):
        return lookup(f.name)
    if isinstance(f, Not):
        return not _truth(f.arg, lookup)
    if isinstance(f, And):
        return all(_truth(g, lookup) for g in f.items)
    if isinstance(f, Or):
        return any(_truth(g, lookup) for g in f.items)
    if isinstance(f, Implies):
        return not _truth(f.lhs, lookup) or _truth(f.rhs, lookup)
    if isinstance(f, Iff):
        return _truth(f.lhs, lookup) == _truth(f.rhs, lookup)
    if isinstance(f, ExactlyOne):
        return sum(_truth(g, lookup) for g in f.items) == 1
    raise TypeError(f"not a formula: {f!r}")


def _eval(f: Formula, lookup, np):
    if isinstance(f, Var):
        return lookup(f.name)
    if isinstance(f, Not):
        return np.logical_not(_eval(f.arg, lookup, np))
    if isinstance(f, And):
        out = _eval(f.items[0], lookup, np)
        for g in f.items[1:]:
            out = np.logical_and(out, _eval(g, lookup, np))
        return out
    if isinstance(f, Or):
        out = _eval(f.items[0], lookup, np)
        for g in f.items[1:]:
            out = np.logical_or(out, _eval(g, lookup, np))
        return out
    if isinstance(f, Implies):
        lhs = _eval(f.lhs, lookup, np)
        return np.logical_or(np.logical_not(lhs), _eval(f.rhs, lookup, np))
    if isinstance(f, Iff):
        return np.equal(_eval(f.lhs, lookup, np), _eval(f.rhs, lookup, np))
    if isinstance(f, ExactlyOne):
        total = sum(np.asarray(_eval(g, lookup, np), dtype=np.int32) for g in f.items)
        return np.equal(total, 1)
    raise TypeError(f"not a formula: {f!r}")


def evaluate(f: Formula, config: Union[Configuration, Mapping[str, Optional[bool]]]) -> bool:
    """Truth value of ``f`` under a configuration that decides all its variables."""
    values = config.assignment if isinstance(config, Configuration) else config

    def lookup(name):
        v = values.get(name)
        if v is None:
            raise UndecidedVariable(f"variable {name!r} is undecided")
        return bool(v)

    return _truth(f, lookup)


def evaluate_columns(f: Formula, columns: Mapping[str, np.ndarray]) -> np.ndarray:
    """Evaluate ``f`` once per row, given one boolean column per variable."""
    def lookup(name):
        try:
            return columns[name]
        except KeyError:
            raise UndecidedVariable(f"variable {name!r} is undecided") from None

    import numpy as np  # deferred: only the oracle path needs it

    n = len(next(iter(columns.values()))) if columns else 1
    return np.broadcast_to(np.asarray(_eval(f, lookup, np), dtype=bool), (n,))


# -- CNF ---------------------------------------------------------------------

STRUCTURAL = "structural"


@dataclass(frozen=True)
class Cnf:
    """Clauses over 1-based integer literals (DIMACS convention).

    ``origins[i]`` is the relation or constraint clause ``i`` was generated
    from, or ``"structural"``.
    """

    variables: tuple[str, ...]
    clauses: tuple[tuple[int, ...], ...]
    origins: tuple[object, ...] = ()

    def __post_init__(self):
        if not self.origins:
            object.__setattr__(self, "origins", (STRUCTURAL,) * len(self.clauses))

    def index(self, name: str) -> int:
        return self.variables.index(name) + 1

    def literal(self, name: str, value: bool = True) -> int:
        i = self.index(name)
        return i if value else -i

    def extend(self, clauses: Iterable[Sequence[int]], origin: object = STRUCTURAL) -> "Cnf":
        extra = tuple(tuple(c) for c in clauses)
        return Cnf(self.variables, self.clauses + extra,
                   self.origins + (origin,) * len(extra))


class _Encoder:
    def __init__(self, variables: Sequence[str]):
        self.names = list(variables)
        self.index = {n: i + 1 for i, n in enumerate(self.names)}
        self.clauses: list[tuple[int, ...]] = []
        self.origins: list[object] = []
        self.origin: object = STRUCTURAL
        self.aux = 0

    def var(self, name: str) -> int:
        if name not in self.index:
            self.names.append(name)
            self.index[name] = len(self.names)
        return self.index[name]

    def fresh(self) -> int:
        self.aux += 1
        name = f"_aux{self.aux}"
        while name in self.index:
            name = "_" + name
        return self.var(name)

    def emit(self, *clause: int) -> None:
        self.clauses.append(tuple(clause))
        self.origins.append(self.origin)

    def literal_of(self, f: Formula) -> Optional[int]:
        """The literal for ``f`` when it needs no auxiliary variable."""
        if isinstance(f, Var):
            return self.var(f.name)
        if isinstance(f, Not):
            inner = self.literal_of(f.arg)
            return None if inner is None else -inner
        if isinstance(f, (And, Or)) and len(f.items) == 1:
            return self.literal_of(f.items[0])
        return None

    def define(self, f: Formula) -> int:
        lit = self.literal_of(f)
        if lit is not None:
            return lit
        if isinstance(f, Not):
            return -self.define(f.arg)
        if isinstance(f, (And, Or)) and len(f.items) == 1:
            return self.define(f.items[0])
        a = self.fresh()
        ls = [self.define(g) for g in f.operands]
        if isinstance(f, And):
            for x in ls:
                self.emit(-a, x)
            self.emit(a, *(-x for x in ls))
        elif isinstance(f, Or):
            for x in ls:
                self.emit(a, -x)
            self.emit(-a, *ls)
        elif isinstance(f, Implies):
            x, y = ls
            self.emit(-a, -x, y)
            self.emit(a, x)
            self.emit(a, -y)
        elif isinstance(f, Iff):
            x, y = ls
            self.emit(-a, -x, y)
            self.emit(-a, x, -y)
            self.emit(a, x, y)
            self.emit(a, -x, -y)
        elif isinstance(f, ExactlyOne):
            self.emit(-a, *ls)
            for x, y in itertools.combinations(ls, 2):
                self.emit(-a, -x, -y)
            for i, x in enumerate(ls):
                self.emit(a, -x, *(y for j, y in enumerate(ls) if j != i))
        else:
            raise TypeError(f"not a formula: {f!r}")
        return a

    def require(self, f: Formula) -> None:
        lit = self.literal_of(f)
        if lit is not None:
            self.emit(lit)
            return
        if isinstance(f, And):
            for g in f.items:
                self.require(g)
            return
        if isinstance(f, Not):
            g = f.arg
            if isinstance(g, Not):
                self.require(g.arg)
                return
            if isinstance(g, And):
                lits = [self.literal_of(h) for h in g.items]
                if None not in lits:
                    self.emit(*(-x for x in lits))
                    return
        if isinstance(f, Or):
            lits = [self.literal_of(h) for h in f.items]
            if None not in lits:
                self.emit(*lits)
                return
        if isinstance(f, Implies):
            x, y = self.literal_of(f.lhs), self.literal_of(f.rhs)
            if x is not None and y is not None:
                self.emit(-x, y)
                return
        self.emit(self.define(f))


def to_cnf(f: Formula, variables: Optional[Sequence[str]] = None,
           origins: Optional[Sequence[object]] = None) -> Cnf:
    """Equisatisfiable CNF of ``f``.

    ``variables`` fixes the order of the leading (non-auxiliary) variables;
    by default it is the preorder of first occurrence in ``f``. Auxiliary
    variables are appended, numbered in preorder of the nodes they define.
    When ``origins`` is given, ``f`` must be an :class:`And` with one origin
    per operand, and every clause is attributed to the operand it came from.
    """
    if variables is None:
        variables = f.variables()
    enc = _Encoder(variables)
    if origins is not None:
        if not isinstance(f, And) or len(f.items) != len(origins):
            raise ValueError("origins need a conjunction with one origin per operand")
        for g, o in zip(f.items, origins):
            enc.origin = o
            enc.require(g)
    else:
        enc.require(f)
    return Cnf(tuple(enc.names), tuple(enc.clauses), tuple(enc.origins))


def model_cnf(m: FeatureModel, mode: SemanticsMode = SemanticsMode.STRICT,
              elements: Optional[Sequence[Element]] = None) -> Cnf:
    """CNF of the model with features first, clauses attributed to elements."""
    if elements is None:
        elements = m.elements
    parts = compile_parts(m, mode, elements)
    return to_cnf(And(parts), variables=m.features,
                  origins=[STRUCTURAL, *elements])


# -- DIMACS ------------------------------------------------------------------

def to_dimacs(cnf: Cnf) -> str:
    lines = [f"c var {i} {name}" for i, name in enumerate(cnf.variables, 1)]
    lines.append(f"p cnf {len(cnf.variables)} {len(cnf.clauses)}")
    lines += [" ".join(map(str, c + (0,))) for c in cnf.clauses]
    return "\n".join(lines) + "\n"


class DimacsError(ValueError):
    pass


def parse_dimacs(text: str) -> Cnf:
    names: dict[int, str] = {}
    header = None
    clauses: list[tuple[int, ...]] = []
    current: list[int] = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("c"):
            parts = line.split()
            if len(parts) == 4 and parts[1] == "var" and parts[2].isdigit():
                names[int(parts[2])] = parts[3]
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise DimacsError(f"line {lineno}: malformed problem line")
            header = (int(parts[2]), int(parts[3]))
            continue
        if header is None:
            raise DimacsError(f"line {lineno}: clause before problem line")
        for tok in line.split():
            try:
                lit = int(tok)
            except ValueError:
                raise DimacsError(f"line {lineno}: bad literal {tok!r}") from None
            if lit == 0:
                clauses.append(tuple(current))
                current = []
            elif abs(lit) > header[0]:
                raise DimacsError(f"line {lineno}: literal {lit} out of range")
            else:
                current.append(lit)
    if header is None:
        raise DimacsError("missing problem line")
    if current:
        clauses.append(tuple(current))
    if len(clauses) != header[1]:
        raise DimacsError(f"header announces {header[1]} clauses, found {len(clauses)}")
    variables = tuple(names.get(i, f"x{i}") for i in range(1, header[0] + 1))
    return Cnf(variables, tuple(clauses))
