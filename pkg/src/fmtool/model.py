"""Feature model domain types and structural validation."""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field, replace
from types import MappingProxyType
from typing import Iterable, Mapping, Optional, Sequence, Union

IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_.]*\Z")


class RelationType(enum.Enum):
    MANDATORY = "mandatory"
    OPTIONAL = "optional"
    OR = "or"
    ALTERNATIVE = "alternative"
    OPTIONAL_OR = "optional_or"
    OPTIONAL_ALTERNATIVE = "optional_alternative"

    @property
    def is_group(self) -> bool:
        return self not in (RelationType.MANDATORY, RelationType.OPTIONAL)

    @property
    def keyword(self) -> str:
        return self.value


class ConstraintKind(enum.Enum):
    REQUIRES = "requires"
    EXCLUDES = "excludes"


class FeatureKind(enum.Enum):
    ROOT = "root"
    VARIATION_POINT = "variation_point"
    VARIANT = "variant"


@dataclass(frozen=True)
class Relation:
    parent: str
    children: tuple[str, ...]
    rtype: RelationType
    id: int = 0

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))

    def __str__(self):
        return f"{self.rtype.keyword}({self.parent} -> {', '.join(self.children)})"


@dataclass(frozen=True)
class CrossTreeConstraint:
    kind: ConstraintKind
    source: str
    target: str
    id: int = 0

    def __str__(self):
        return f"{self.source} {self.kind.value} {self.target}"


Element = Union[Relation, CrossTreeConstraint]


# Convenience constructors, mostly for tests and hand-built models.

def mandatory(parent: str, child: str) -> Relation:
    return Relation(parent, (child,), RelationType.MANDATORY)


def optional(parent: str, child: str) -> Relation:
    return Relation(parent, (child,), RelationType.OPTIONAL)


def or_group(parent: str, children: Iterable[str]) -> Relation:
    return Relation(parent, tuple(children), RelationType.OR)


def alternative(parent: str, children: Iterable[str]) -> Relation:
    return Relation(parent, tuple(children), RelationType.ALTERNATIVE)


def optional_or(parent: str, children: Iterable[str]) -> Relation:
    return Relation(parent, tuple(children), RelationType.OPTIONAL_OR)


def optional_alternative(parent: str, children: Iterable[str]) -> Relation:
    return Relation(parent, tuple(children), RelationType.OPTIONAL_ALTERNATIVE)


def requires(source: str, target: str) -> CrossTreeConstraint:
    return CrossTreeConstraint(ConstraintKind.REQUIRES, source, target)


def excludes(source: str, target: str) -> CrossTreeConstraint:
    return CrossTreeConstraint(ConstraintKind.EXCLUDES, source, target)


class StructuralError(ValueError):
    """Raised by :func:`build_model` when the input does not form a valid model.

    ``feature`` names the offending feature when there is one; ``constraint``
    is set for errors raised while checking cross-tree constraints.
    """

    def __init__(self, message: str, feature: Optional[str] = None,
                 constraint: Optional[CrossTreeConstraint] = None):
        super().__init__(message)
        self.feature = feature
        self.constraint = constraint


class InvalidFeatureName(StructuralError):
    pass


class DuplicateFeature(StructuralError):
    pass


class MultipleParents(StructuralError):
    pass


class NoRoot(StructuralError):
    pass


class MultipleRoots(StructuralError):
    pass


class RootMismatch(StructuralError):
    pass


class Cycle(StructuralError):
    pass


class UnknownFeatureInConstraint(StructuralError):
    pass


class HierarchicalConstraint(StructuralError):
    pass


class EmptyChildList(StructuralError):
    pass


class BadGroupArity(StructuralError):
    pass


class UnknownFeature(KeyError):
    def __str__(self):
        return f"unknown feature {self.args[0]!r}"


@dataclass(frozen=True)
class FeatureModel:
    name: str
    root: str
    features: tuple[str, ...]
    relations: tuple[Relation, ...] = ()
    constraints: tuple[CrossTreeConstraint, ...] = ()
    _parent: Mapping[str, str] = field(default=MappingProxyType({}), compare=False, repr=False)
    _incoming: Mapping[str, Relation] = field(default=MappingProxyType({}), compare=False,
                                              repr=False)

    def __contains__(self, name: str) -> bool:
        return name in self._parent or name == self.root

    @property
    def elements(self) -> tuple[Element, ...]:
        """Relations followed by constraints, in declaration order."""
        return self.relations + self.constraints

    def parent(self, name: str) -> Optional[str]:
        self._check(name)
        return self._parent.get(name)

    def incoming(self, name: str) -> Optional[Relation]:
        """The relation that has ``name`` as a child (None for the root)."""
        self._check(name)
        return self._incoming.get(name)

    def children(self, name: str) -> tuple[str, ...]:
        self._check(name)
        return tuple(c for r in self.relations if r.parent == name for c in r.children)

    def ancestors(self, name: str) -> list[str]:
        out = []
        p = self.parent(name)
        while p is not None:
            out.append(p)
            p = self._parent.get(p)
        return out

    def _check(self, name: str) -> None:
        if name not in self:
            raise UnknownFeature(name)


def _check_name(name: str) -> None:
    if not isinstance(name, str) or not IDENT_RE.match(name):
        raise InvalidFeatureName(f"invalid feature name {name!r}", feature=str(name))


def build_model(name: str, relations: Sequence[Relation],
                constraints: Sequence[CrossTreeConstraint] = (),
                root: Optional[str] = None) -> FeatureModel:
    """Validate relations and constraints and assemble a :class:`FeatureModel`.

    The root is the unique feature that never appears as a child. ``root``
    may be given explicitly; it must agree with the inferred one, and it is
    required when there are no relations at all.

    Relation and constraint ids are renumbered 1.. in the order given.
    Features are ordered root first, then by first appearance.
    """
    relations = [replace(r, id=i) for i, r in enumerate(relations, 1)]
    constraints = [replace(c, id=i) for i, c in enumerate(constraints, 1)]

    order: dict[str, None] = {}
    parent_of: dict[str, str] = {}
    incoming: dict[str, Relation] = {}
    for r in relations:
        if not r.children:
            raise EmptyChildList(f"relation {r.id} under {r.parent!r} has no children",
                                 feature=r.parent)
        _check_name(r.parent)
        for c in r.children:
            _check_name(c)
        if len(set(r.children)) != len(r.children):
            dup = next(c for i, c in enumerate(r.children) if c in r.children[:i])
            raise DuplicateFeature(f"feature {dup!r} listed twice under {r.parent!r}",
                                   feature=dup)
        if r.parent in r.children:
            raise Cycle(f"feature {r.parent!r} is its own child", feature=r.parent)
        if r.rtype.is_group and len(r.children) < 2:
            raise BadGroupArity(
                f"{r.rtype.keyword} group under {r.parent!r} needs at least 2 children",
                feature=r.parent)
        if not r.rtype.is_group and len(r.children) != 1:
            raise BadGroupArity(
                f"{r.rtype.keyword} relation under {r.parent!r} takes exactly one child",
                feature=r.parent)
        order.setdefault(r.parent)
        for c in r.children:
            if c in parent_of:
                raise MultipleParents(
                    f"feature {c!r} has two parents: {parent_of[c]!r} and {r.parent!r}",
                    feature=c)
            parent_of[c] = r.parent
            incoming[c] = r
            order.setdefault(c)

    if not relations:
        if root is None:
            raise NoRoot("model has no relations and no explicit root")
        _check_name(root)
        order[root] = None
        inferred = root
    else:
        candidates = [f for f in order if f not in parent_of]
        if not candidates:
            raise Cycle("every feature has a parent; the hierarchy contains a cycle",
                        feature=next(iter(order)))
        if len(candidates) > 1:
            raise MultipleRoots(
                "more than one feature without parent: " + ", ".join(candidates),
                feature=candidates[1])
        inferred = candidates[0]
        if root is not None and root != inferred:
            raise RootMismatch(f"declared root {root!r} but the hierarchy is rooted at "
                               f"{inferred!r}", feature=root)
        for f in order:
            seen = {f}
            p = parent_of.get(f)
            while p is not None:
                if p in seen:
                    raise Cycle(f"feature {f!r} is part of a cycle", feature=f)
                seen.add(p)
                p = parent_of.get(p)

    def ancestors(f):
        out = set()
        p = parent_of.get(f)
        while p is not None:
            out.add(p)
            p = parent_of.get(p)
        return out

    for c in constraints:
        for end in (c.source, c.target):
            if end not in order:
                raise UnknownFeatureInConstraint(
                    f"constraint '{c}' references unknown feature {end!r}",
                    feature=end, constraint=c)
        if c.source == c.target:
            raise HierarchicalConstraint(f"constraint '{c}' relates a feature to itself",
                                         feature=c.source, constraint=c)
        if c.source in ancestors(c.target) or c.target in ancestors(c.source):
            raise HierarchicalConstraint(
                f"constraint '{c}' connects a feature with its ancestor", feature=c.source,
                constraint=c)

    features = (inferred,) + tuple(f for f in order if f != inferred)
    return FeatureModel(name=name, root=inferred, features=features,
                        relations=tuple(relations), constraints=tuple(constraints),
                        _parent=MappingProxyType(dict(parent_of)),
                        _incoming=MappingProxyType(incoming))


def feature_kind(model: FeatureModel, name: str) -> FeatureKind:
    model._check(name)
    if name == model.root:
        return FeatureKind.ROOT
    if any(r.parent == name for r in model.relations):
        return FeatureKind.VARIATION_POINT
    return FeatureKind.VARIANT


@dataclass(frozen=True)
class Configuration:
    """Truth assignment over features; ``None`` marks an undecided feature."""

    assignment: Mapping[str, Optional[bool]]

    def __post_init__(self):
        object.__setattr__(self, "assignment", MappingProxyType(dict(self.assignment)))

    @property
    def total(self) -> bool:
        return all(v is not None for v in self.assignment.values())

    @property
    def selected(self) -> tuple[str, ...]:
        return tuple(f for f, v in self.assignment.items() if v is True)

    def __getitem__(self, name: str) -> Optional[bool]:
        return self.assignment[name]


def make_config(model: FeatureModel, selected: Iterable[str], total: bool = True,
                deselected: Iterable[str] = ()) -> Configuration:
    """Build a configuration; the root is always selected.

    For a total configuration everything not selected is False. For a
    partial one it is undecided unless listed in ``deselected``.
    """
    selected = list(selected)
    deselected = list(deselected)
    for f in selected + deselected:
        model._check(f)
    default = False if total else None
    values = {f: default for f in model.features}
    for f in deselected:
        values[f] = False
    for f in selected:
        values[f] = True
    values[model.root] = True
    return Configuration(values)
