"""Analysis operations on feature models.

Every query compiles the model once to CNF and asks the DPLL engine
small satisfiability questions under unit assumptions.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Union

from .logic import (STRUCTURAL, SemanticsMode, Var, compile_element, evaluate,
                    model_cnf)
from .model import Configuration, Element, FeatureModel, RelationType, UnknownFeature
from .sat import SolutionSet, Solver

STRICT = SemanticsMode.STRICT


class VoidModelError(ValueError):
    """The query needs at least one product but the model has none."""


class ConditionAbsent(ValueError):
    """An explanation was requested for a condition that does not hold."""


@dataclass(frozen=True)
class Violation:
    source: Union[Element, str]
    formula: str
    value: bool = False


@dataclass(frozen=True)
class ConfigVerdict:
    valid: bool
    violations: tuple[Violation, ...] = ()


@dataclass(frozen=True)
class ModelHealthReport:
    void: bool
    dead: tuple[str, ...] = ()
    false_optional: tuple[str, ...] = ()
    implicated: dict[str, tuple[Element, ...]] = field(default_factory=dict)
    void_explanation: tuple[Element, ...] = ()


@dataclass(frozen=True)
class PropagationResult:
    forced_in: tuple[str, ...] = ()
    forced_out: tuple[str, ...] = ()
    free: tuple[str, ...] = ()
    conflict: bool = False


# explanation targets

@dataclass(frozen=True)
class VoidModel:
    pass


@dataclass(frozen=True)
class Dead:
    feature: str


@dataclass(frozen=True)
class FalseOptional:
    feature: str


Target = Union[VoidModel, Dead, FalseOptional]


def check_config(m: FeatureModel, cfg: Configuration,
                 mode: SemanticsMode = STRICT) -> ConfigVerdict:
    """Evaluate the root assertion and each relation and constraint separately."""
    for f in cfg.assignment:
        if f not in m:
            raise UnknownFeature(f)
    if not cfg.total:
        raise ValueError("check_config needs a total configuration")
    violations = []
    if not evaluate(Var(m.root), cfg):
        violations.append(Violation(STRUCTURAL, m.root))
    for e in m.elements:
        formula = compile_element(e, mode)
        if not evaluate(formula, cfg):
            violations.append(Violation(e, str(formula)))
    return ConfigVerdict(not violations, tuple(violations))


def _solver(m: FeatureModel, mode: SemanticsMode,
            elements: Optional[Sequence[Element]] = None) -> Solver:
    return Solver(model_cnf(m, mode, elements))


def is_void(m: FeatureModel, mode: SemanticsMode = STRICT) -> bool:
    return not _solver(m, mode).satisfiable()


def _void_error(m: FeatureModel) -> VoidModelError:
    return VoidModelError(f"model {m.name!r} has no products")


def _backbone(s: Solver, features: Sequence[str], decisions: Sequence[int] = ()):
    """Features True in every solution and False in every solution, or None if UNSAT.

    Each witness found rules out both verdicts for the features it decides
    each way, so most features never need a query of their own.
    """
    first = s.solve(decisions)
    if not first:
        return None
    seen_true = {f for f in features if first.witness[f]}
    seen_false = set(features) - seen_true
    for f in features:
        if f in seen_true and f in seen_false:
            continue
        lit = s.cnf.literal(f, f in seen_false)
        r = s.solve([*decisions, lit])
        if r:
            seen_true.update(g for g in features if r.witness[g])
            seen_false.update(g for g in features if not r.witness[g])
    always = [f for f in features if f not in seen_false]
    never = [f for f in features if f not in seen_true]
    return always, never


def _non_void_backbone(m: FeatureModel, mode: SemanticsMode):
    bb = _backbone(_solver(m, mode), m.features)
    if bb is None:
        raise _void_error(m)
    return bb


def dead_features(m: FeatureModel, mode: SemanticsMode = STRICT) -> tuple[str, ...]:
    return tuple(_non_void_backbone(m, mode)[1])


def _non_mandatory(m: FeatureModel, f: str) -> bool:
    r = m.incoming(f)
    return r is not None and r.rtype is not RelationType.MANDATORY


def false_optionals(m: FeatureModel, mode: SemanticsMode = STRICT) -> tuple[str, ...]:
    """Non-mandatory features that are selected whenever their parent is.

    Features whose parent is dead, and dead features themselves, are never
    reported here.
    """
    dead = set(dead_features(m, mode))
    s = _solver(m, mode)
    out = []
    for f in m.features:
        if not _non_mandatory(m, f) or f in dead or m.parent(f) in dead:
            continue
        if not s.satisfiable(s.cnf.literal(m.parent(f)), -s.cnf.literal(f)):
            out.append(f)
    return tuple(out)


def core_features(m: FeatureModel, mode: SemanticsMode = STRICT) -> tuple[str, ...]:
    return tuple(_non_void_backbone(m, mode)[0])


@functools.lru_cache(maxsize=256)
def _marginals(m: FeatureModel, mode: SemanticsMode) -> tuple[int, dict[str, int]]:
    # models are immutable, so one pass over the products serves every feature
    return _solver(m, mode).marginals(m.features)


def commonalities(m: FeatureModel, mode: SemanticsMode = STRICT) -> dict[str, Fraction]:
    """Share of products containing each feature, in declaration order."""
    total, hits = _marginals(m, mode)
    if not total:
        raise _void_error(m)
    return {f: Fraction(hits[f], total) for f in m.features}


def commonality(m: FeatureModel, f: str, mode: SemanticsMode = STRICT) -> Fraction:
    if f not in m:
        raise UnknownFeature(f)
    return commonalities(m, mode)[f]


def list_products(m: FeatureModel, mode: SemanticsMode = STRICT,
                  limit: Optional[int] = None) -> SolutionSet:
    return _solver(m, mode).enumerate(m.features, limit)


def count_products(m: FeatureModel, mode: SemanticsMode = STRICT) -> int:
    return _solver(m, mode).count(m.features)


def propagate(m: FeatureModel, cfg: Configuration,
              mode: SemanticsMode = STRICT) -> PropagationResult:
    """Semantic consequences of the decided features in a partial configuration."""
    s = _solver(m, mode)
    cnf = s.cnf
    decisions = []
    for f, v in cfg.assignment.items():
        if f not in m:
            raise UnknownFeature(f)
        if v is not None:
            decisions.append(cnf.literal(f, v))
    undecided = [f for f in m.features if cfg.assignment.get(f) is None]
    bb = _backbone(s, undecided, decisions)
    if bb is None:
        return PropagationResult(conflict=True)
    forced_in, forced_out = bb
    fixed = set(forced_in) | set(forced_out)
    free = [f for f in undecided if f not in fixed]
    return PropagationResult(tuple(forced_in), tuple(forced_out), tuple(free))


def _condition(m: FeatureModel, mode: SemanticsMode, target: Target,
               kept: Sequence[Element]) -> bool:
    s = _solver(m, mode, kept)
    if isinstance(target, VoidModel):
        return not s.satisfiable()
    if isinstance(target, Dead):
        return not s.satisfiable(s.cnf.literal(target.feature))
    f = target.feature
    return not s.satisfiable(s.cnf.literal(m.parent(f)), -s.cnf.literal(f))


def _holds(m: FeatureModel, mode: SemanticsMode, target: Target) -> bool:
    if isinstance(target, VoidModel):
        return is_void(m, mode)
    if isinstance(target, Dead):
        if target.feature not in m:
            raise UnknownFeature(target.feature)
        return _condition(m, mode, target, m.elements)
    if isinstance(target, FalseOptional):
        if target.feature not in m:
            raise UnknownFeature(target.feature)
        return not is_void(m, mode) and target.feature in false_optionals(m, mode)
    raise TypeError(f"unknown explanation target {target!r}")


def explain(m: FeatureModel, mode: SemanticsMode = STRICT,
            target: Target = VoidModel()) -> tuple[Element, ...]:
    """Subset-minimal set of relations/constraints that still produces ``target``.

    Deletion-based: walk the elements in declaration order and drop each one
    whose removal keeps the condition. The root assertion is always kept.
    """
    if not _holds(m, mode, target):
        raise ConditionAbsent(f"{target} does not hold in model {m.name!r}")
    kept = list(m.elements)
    for e in m.elements:
        trial = [k for k in kept if k != e]
        if _condition(m, mode, target, trial):
            kept = trial
    return tuple(kept)


def analyze(m: FeatureModel, mode: SemanticsMode = STRICT) -> ModelHealthReport:
    """Void check, dead and false-optional features, with an explanation for each.

    A void model is reported alone.
    """
    if is_void(m, mode):
        return ModelHealthReport(void=True, void_explanation=explain(m, mode, VoidModel()))
    dead = dead_features(m, mode)
    fo = false_optionals(m, mode)
    implicated = {f: explain(m, mode, Dead(f)) for f in dead}
    implicated.update({f: explain(m, mode, FalseOptional(f)) for f in fo})
    return ModelHealthReport(False, dead, fo, implicated)
