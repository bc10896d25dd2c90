"""DPLL satisfiability, solution enumeration/counting, and a brute-force oracle."""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .logic import Cnf, Formula, evaluate_columns, parse_dimacs, to_dimacs  # noqa: F401

ORACLE_MAX_VARS = 24


class Status(enum.Enum):
    SAT = "SAT"
    UNSAT = "UNSAT"


@dataclass(frozen=True)
class SatResult:
    status: Status
    witness: Optional[dict[str, bool]] = None

    @property
    def satisfiable(self) -> bool:
        return self.status is Status.SAT

    def __bool__(self):
        return self.satisfiable


@dataclass(frozen=True)
class SolutionSet:
    variables: tuple[str, ...]
    solutions: tuple[tuple[bool, ...], ...]
    truncated: bool = False
    limit: Optional[int] = None

    def __len__(self):
        return len(self.solutions)

    def __iter__(self):
        return iter(self.solutions)

    def as_dicts(self) -> list[dict[str, bool]]:
        return [dict(zip(self.variables, s)) for s in self.solutions]

    def selections(self) -> list[tuple[str, ...]]:
        """Names set to True in each solution."""
        return [tuple(v for v, b in zip(self.variables, s) if b) for s in self.solutions]


class _Dpll:
    # Counter-based DPLL: per clause, number of true and false literals; per
    # literal, number of occurrences in not-yet-satisfied clauses (for the
    # pure-literal rule). All updates are undone on backtracking via the trail.

    def __init__(self, nvars: int, clauses: Iterable[Sequence[int]]):
        self.n = nvars
        self.clauses = [tuple(dict.fromkeys(c)) for c in clauses]
        self.slots = [tuple(_slot(x) for x in c) for c in self.clauses]
        self.occ: list[list[int]] = [[] for _ in range(2 * nvars + 2)]
        for i, c in enumerate(self.slots):
            for s in c:
                self.occ[s].append(i)
        self.ntrue = [0] * len(self.clauses)
        self.nfalse = [0] * len(self.clauses)
        self.active = [len(o) for o in self.occ]
        self.unsatisfied = len(self.clauses)
        self.val: list[Optional[bool]] = [None] * (nvars + 1)
        self.trail: list[int] = []
        # unit clauses are propagated once; queries backtrack to this level
        units = [c[0] for c in reversed(self.clauses) if len(c) == 1]
        self.root_ok = all(self.clauses) and self._propagate(units)
        self.base = len(self.trail)

    def _assign(self, lit: int, queue: list[int]) -> bool:
        val = self.val
        val[abs(lit)] = lit > 0
        self.trail.append(lit)
        ntrue, nfalse, active = self.ntrue, self.nfalse, self.active
        slot = _slot(lit)
        ok = True
        for i in self.occ[slot]:
            ntrue[i] += 1
            if ntrue[i] == 1:
                self.unsatisfied -= 1
                for s in self.slots[i]:
                    active[s] -= 1
        for i in self.occ[slot ^ 1]:
            nfalse[i] += 1
            if ntrue[i]:
                continue
            c = self.clauses[i]
            if nfalse[i] == len(c):
                ok = False
            elif nfalse[i] == len(c) - 1:
                for x in c:
                    if val[abs(x)] is None:
                        queue.append(x)
                        break
        return ok

    def _undo(self, mark: int) -> None:
        ntrue, nfalse, active = self.ntrue, self.nfalse, self.active
        while len(self.trail) > mark:
            lit = self.trail.pop()
            self.val[abs(lit)] = None
            slot = _slot(lit)
            for i in self.occ[slot]:
                ntrue[i] -= 1
                if ntrue[i] == 0:
                    self.unsatisfied += 1
                    for s in self.slots[i]:
                        active[s] += 1
            for i in self.occ[slot ^ 1]:
                nfalse[i] -= 1

    def _propagate(self, queue: list[int]) -> bool:
        while queue:
            lit = queue.pop()
            cur = self.val[abs(lit)]
            if cur is not None:
                if cur != (lit > 0):
                    return False
                continue
            if not self._assign(lit, queue):
                return False
        return True

    def _pure_literals(self, allowed=None) -> list[int]:
        out = []
        for v in range(1, self.n + 1):
            if self.val[v] is not None or (allowed is not None and v not in allowed):
                continue
            pos, neg = self.active[2 * v], self.active[2 * v + 1]
            if pos and not neg:
                out.append(v)
            elif neg and not pos:
                out.append(-v)
        return out

    def _pure_pass(self, allowed=None) -> bool:
        while self.unsatisfied:
            pure = self._pure_literals(allowed)
            if not pure:
                break
            if not self._propagate(pure):
                return False
        return True

    def _search(self) -> bool:
        mark = len(self.trail)
        if not self._pure_pass():
            self._undo(mark)
            return False
        if not self.unsatisfied:
            return True
        v = next(i for i in range(1, self.n + 1) if self.val[i] is None)
        for lit in (v, -v):
            inner = len(self.trail)
            if self._propagate([lit]) and self._search():
                return True
            self._undo(inner)
        self._undo(mark)
        return False

    def _start(self, assumptions: Sequence[int]) -> bool:
        self._undo(self.base)
        return self.root_ok and self._propagate(list(reversed(assumptions)))

    def solve(self, assumptions: Sequence[int] = ()) -> Optional[list[bool]]:
        model = None
        if self._start(assumptions) and self._search():
            model = self._model()
        self._undo(self.base)
        return model

    def _model(self) -> list[bool]:
        return [bool(self.val[v]) for v in range(1, self.n + 1)]

    def _search_all(self, order: Sequence[int], free: set[int]):
        # Decide projected variables first (in ``order``). Yields cubes: the
        # current assignment with None for projected variables that no clause
        # constrains any more, each standing for both values. Cubes differ on
        # some decided projected variable, so no solution is produced twice.
        # Only non-projected variables may be fixed by the pure-literal rule.
        mark = len(self.trail)
        if self._pure_pass(free):
            v = next((i for i in order if self.val[i] is None), None)
            if not self.unsatisfied:
                yield self.val[1:]
            elif v is None:
                if self._search():
                    yield self.val[1:]
            else:
                for lit in (v, -v):
                    inner = len(self.trail)
                    if self._propagate([lit]):
                        yield from self._search_all(order, free)
                    self._undo(inner)
        self._undo(mark)

    def solve_all(self, projected: Sequence[int], assumptions: Sequence[int] = ()):
        if self._start(assumptions):
            order = sorted(set(projected))
            yield from self._search_all(order, set(range(1, self.n + 1)) - set(order))
        self._undo(self.base)


def _slot(lit: int) -> int:
    return 2 * lit if lit > 0 else -2 * lit + 1


def _projection_indices(cnf: Cnf, projection: Optional[Sequence[str]]) -> list[int]:
    if projection is None:
        return list(range(1, len(cnf.variables) + 1))
    missing = [p for p in projection if p not in cnf.variables]
    if missing:
        raise ValueError(f"projection variables not in CNF: {', '.join(missing)}")
    return [cnf.index(p) for p in projection]


class Solver:
    """One CNF, many queries: the engine is built once and reset between calls.

    Branching picks the lowest-index unassigned variable, True first, so
    witnesses are reproducible. Variables left unassigned come out False.
    """

    def __init__(self, cnf: Cnf):
        self.cnf = cnf
        self._engine = _Dpll(len(cnf.variables), cnf.clauses)

    def solve(self, assumptions: Iterable[int] = ()) -> SatResult:
        model = self._engine.solve(list(assumptions))
        if model is None:
            return SatResult(Status.UNSAT)
        return SatResult(Status.SAT, dict(zip(self.cnf.variables, model)))

    def satisfiable(self, *assumptions: int) -> bool:
        return self._engine.solve(assumptions) is not None

    def enumerate(self, projection: Optional[Sequence[str]] = None,
                  limit: Optional[int] = None,
                  assumptions: Iterable[int] = ()) -> SolutionSet:
        """All distinct solutions projected onto ``projection`` (default: every variable).

        The search decides the projected variables first and checks each
        complete projected assignment for an extension, so every solution is
        produced exactly once without blocking clauses. Projected variables
        left unconstrained expand to both values. ``truncated`` is set only
        when a solution beyond ``limit`` exists.
        """
        idx = _projection_indices(self.cnf, projection)
        names = tuple(self.cnf.variables[i - 1] for i in idx)
        found: list[tuple[bool, ...]] = []
        truncated = False
        for cube in self._engine.solve_all(idx, list(assumptions)):
            open_vars = sorted({i for i in idx if cube[i - 1] is None})
            for bits in itertools.product((False, True), repeat=len(open_vars)):
                if limit is not None and len(found) >= limit:
                    truncated = True
                    break
                value = dict(zip(open_vars, bits))
                found.append(tuple(value[i] if i in value else cube[i - 1] for i in idx))
            if truncated:
                break
        found.sort()
        return SolutionSet(names, tuple(found), truncated, limit)

    def count(self, projection: Optional[Sequence[str]] = None,
              assumptions: Iterable[int] = ()) -> int:
        """Number of distinct projected solutions, without listing them."""
        idx = set(_projection_indices(self.cnf, projection))
        return sum(1 << sum(1 for i in idx if cube[i - 1] is None)
                   for cube in self._engine.solve_all(sorted(idx), list(assumptions)))

    def marginals(self, projection: Optional[Sequence[str]] = None) -> tuple[int, dict[str, int]]:
        """Solution count and, per projected variable, the solutions setting it True."""
        idx = sorted(set(_projection_indices(self.cnf, projection)))
        total = 0
        hits = dict.fromkeys(idx, 0)
        for cube in self._engine.solve_all(idx):
            open_vars = [i for i in idx if cube[i - 1] is None]
            size = 1 << len(open_vars)
            total += size
            for i in idx:
                if cube[i - 1] is None:
                    hits[i] += size >> 1
                elif cube[i - 1]:
                    hits[i] += size
        return total, {self.cnf.variables[i - 1]: hits[i] for i in idx}


def solve(cnf: Cnf, assumptions: Iterable[int] = ()) -> SatResult:
    """Decide ``cnf`` plus optional unit assumptions (signed literals)."""
    return Solver(cnf).solve(assumptions)


def enumerate_solutions(cnf: Cnf, projection: Optional[Sequence[str]] = None,
                        limit: Optional[int] = None,
                        assumptions: Iterable[int] = ()) -> SolutionSet:
    return Solver(cnf).enumerate(projection, limit, assumptions)


def count(cnf: Cnf, projection: Optional[Sequence[str]] = None,
          assumptions: Iterable[int] = ()) -> int:
    return Solver(cnf).count(projection, assumptions)


class TooManyVariables(ValueError):
    pass


def oracle_enumerate(f: Formula, variables: Sequence[str], chunk: int = 1 << 16) -> SolutionSet:
    """Exhaustive truth-table enumeration of ``f`` over ``variables``.

    Rows are visited in ascending bit-vector order (first variable most
    significant, False before True), which is also the output order.
    """
    import numpy as np  # deferred so the solver and CLI start without it

    n = len(variables)
    if n > ORACLE_MAX_VARS:
        raise TooManyVariables(f"{n} variables exceed the oracle cap of {ORACLE_MAX_VARS}")
    total = 1 << n
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    found = []
    for start in range(0, total, chunk):
        rows = np.arange(start, min(total, start + chunk), dtype=np.int64)
        bits = ((rows[:, None] >> shifts[None, :]) & 1).astype(bool)
        columns = {v: bits[:, j] for j, v in enumerate(variables)}
        mask = evaluate_columns(f, columns)
        found.extend(tuple(bool(b) for b in row) for row in bits[mask])
    return SolutionSet(tuple(variables), tuple(found))
