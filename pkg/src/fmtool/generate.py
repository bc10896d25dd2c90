"""Seeded random feature models for property tests."""

from __future__ import annotations

import random
from typing import Union

from .model import (ConstraintKind, CrossTreeConstraint, FeatureModel, Relation,
                    RelationType, build_model)

_GROUPS = (RelationType.OR, RelationType.ALTERNATIVE, RelationType.OPTIONAL_OR,
           RelationType.OPTIONAL_ALTERNATIVE)


def random_model(seed: Union[int, random.Random], max_features: int = 14, max_depth: int = 4,
                 max_fanout: int = 4, constraint_density: float = 0.3,
                 name: str = "Generated") -> FeatureModel:
    """A random valid model; identical seeds give identical models.

    The tree is grown breadth first, so each parent's relations are
    contiguous (the shape the text format produces). At most
    ``constraint_density * n`` cross-tree constraints are added.
    """
    rng = seed if isinstance(seed, random.Random) else random.Random(seed)
    root = "f"
    relations: list[Relation] = []
    parent_of: dict[str, str] = {}
    features = [root]
    queue = [(root, 0)]
    while queue:
        parent, depth = queue.pop(0)
        room = max_features - len(features)
        expand = 0.95 if parent == root else 0.55
        if depth >= max_depth or room <= 0 or rng.random() > expand:
            continue
        k = rng.randint(1, min(max_fanout, room))
        prefix = "f" if parent == root else parent + "."
        children = [f"{prefix}{i}" for i in range(1, k + 1)]
        for c in children:
            parent_of[c] = parent
            features.append(c)
            queue.append((c, depth + 1))
        while children:
            if len(children) >= 2 and rng.random() < 0.5:
                size = rng.randint(2, len(children))
                group, children = children[:size], children[size:]
                relations.append(Relation(parent, tuple(group), rng.choice(_GROUPS)))
            else:
                rtype = rng.choice((RelationType.MANDATORY, RelationType.OPTIONAL))
                relations.append(Relation(parent, (children.pop(0),), rtype))

    def ancestors(f):
        out = set()
        while f in parent_of:
            f = parent_of[f]
            out.add(f)
        return out

    constraints: list[CrossTreeConstraint] = []
    budget = int(constraint_density * len(features))
    wanted = rng.randint(0, budget) if budget else 0
    attempts = 0
    while len(constraints) < wanted and attempts < 50:
        attempts += 1
        a, b = rng.sample(features, 2) if len(features) >= 2 else (root, root)
        if a == b or a in ancestors(b) or b in ancestors(a):
            continue
        kind = ConstraintKind.REQUIRES if rng.random() < 0.6 else ConstraintKind.EXCLUDES
        constraints.append(CrossTreeConstraint(kind, a, b))
    return build_model(name, relations, constraints, root=root)
