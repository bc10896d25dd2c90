"""Text format for feature models, plus DOT and Alloy exporters.

Grammar::

    model        = "model" IDENT ["root" IDENT] featureblock [constraintblock] ;
    featureblock = "features" "{" { node } "}" ;
    node         = IDENT "{" group { group } "}" ;
    group        = kind "{" IDENT { IDENT } "}" ;
    kind         = "mandatory" | "optional" | "or" | "alternative"
                 | "optional_or" | "optional_alternative" ;
    constraintblock = "constraints" "{" { IDENT ("requires" | "excludes") IDENT } "}" ;

Keywords are contextual, so any identifier may name a feature. ``#``
starts a comment that runs to the end of the line.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import Iterator, Optional

from .model import (ConstraintKind, CrossTreeConstraint, FeatureModel, Relation,
                    RelationType, StructuralError, build_model)

KINDS = {t.keyword: t for t in RelationType}
CONSTRAINT_KINDS = {k.value: k for k in ConstraintKind}

_IDENT_START = re.compile(r"[A-Za-z_]")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_.]*")
_JUNK = re.compile(r"[^\s{}#]+")


@dataclass(frozen=True)
class SourceSpan:
    line: int
    column: int
    length: int = 1


class ErrorKind(enum.Enum):
    LEXICAL = "lexical"
    SYNTACTIC = "syntax"
    SEMANTIC = "semantic"


@dataclass(frozen=True)
class ParseError:
    span: SourceSpan
    message: str
    kind: ErrorKind

    def __str__(self):
        return f"{self.span.line}:{self.span.column}: {self.kind.value} error: {self.message}"


class ParseFailure(ValueError):
    def __init__(self, errors: list[ParseError]):
        super().__init__("\n".join(str(e) for e in errors))
        self.errors = errors


@dataclass(frozen=True)
class Token:
    kind: str  # WORD, LBRACE, RBRACE, EOF
    text: str
    span: SourceSpan

    def describe(self) -> str:
        if self.kind == "EOF":
            return "end of input"
        return repr(self.text)


def tokenize(text: str, errors: list[ParseError]) -> list[Token]:
    tokens = []
    lines = text.split("\n")
    for line, src in enumerate(lines, 1):
        i = 0
        while i < len(src):
            ch = src[i]
            col = i + 1
            if ch.isspace():
                i += 1
            elif ch == "#":
                break
            elif ch in "{}":
                tokens.append(Token("LBRACE" if ch == "{" else "RBRACE", ch,
                                    SourceSpan(line, col, 1)))
                i += 1
            elif _IDENT_START.match(ch):
                m = _IDENT.match(src, i)
                tokens.append(Token("WORD", m.group(), SourceSpan(line, col, len(m.group()))))
                i = m.end()
            else:
                m = _JUNK.match(src, i)
                bad = m.group()
                errors.append(ParseError(SourceSpan(line, col, len(bad)),
                                         f"invalid token {bad!r}", ErrorKind.LEXICAL))
                i = m.end()
    # EOF errors point at the last visible character.
    end = SourceSpan(1, 1, 1)
    for n, src in enumerate(lines, 1):
        if src.strip():
            end = SourceSpan(n, len(src.rstrip()), 1)
    tokens.append(Token("EOF", "", end))
    return tokens


class _Bail(Exception):
    pass


@dataclass
class _Group:
    rtype: RelationType
    parent: str
    members: list[Token]


class _Parser:
    def __init__(self, tokens: list[Token], errors: list[ParseError]):
        self.tokens = tokens
        self.pos = 0
        self.depth = 0
        self.errors = errors
        self.name: Optional[Token] = None
        self.root: Optional[Token] = None
        self.nodes: list[Token] = []
        self.groups: list[_Group] = []
        self.constraints: list[tuple[Token, Token, Token]] = []

    # token helpers

    def peek(self, offset: int = 0) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def advance(self) -> Token:
        tok = self.peek()
        if tok.kind != "EOF":
            self.pos += 1
        if tok.kind == "LBRACE":
            self.depth += 1
        elif tok.kind == "RBRACE":
            self.depth -= 1
        return tok

    def at_word(self, text: Optional[str] = None) -> bool:
        tok = self.peek()
        return tok.kind == "WORD" and (text is None or tok.text == text)

    def fail(self, tok: Token, message: str):
        self.errors.append(ParseError(tok.span, message, ErrorKind.SYNTACTIC))
        raise _Bail

    def expect(self, kind: str, what: str) -> Token:
        tok = self.peek()
        if tok.kind != kind:
            self.fail(tok, f"expected {what}, found {tok.describe()}")
        return self.advance()

    def expect_word(self, text: str) -> Token:
        if not self.at_word(text):
            self.fail(self.peek(), f"expected '{text}', found {self.peek().describe()}")
        return self.advance()

    # recovery

    def skip_node(self, depth: int, line: int) -> None:
        # Drop tokens until the broken node is closed, or until a fresh line
        # at the enclosing depth starts something that looks like a node.
        while True:
            tok = self.peek()
            if tok.kind == "EOF":
                return
            if self.depth == depth:
                if tok.kind == "RBRACE":
                    return
                if tok.span.line != line and tok.kind == "WORD" \
                        and self.peek(1).kind == "LBRACE":
                    return
            self.advance()
            if tok.kind == "RBRACE" and self.depth == depth:
                return

    def skip_line(self, depth: int, line: int) -> None:
        while True:
            tok = self.peek()
            if tok.kind == "EOF" or (tok.kind == "RBRACE" and self.depth == depth):
                return
            if tok.span.line != line and self.depth == depth:
                return
            self.advance()

    def at_constraint_block(self) -> bool:
        # A missing '}' before the constraints block; a node that happens to
        # be called "constraints" opens with a relation kind instead.
        return (self.at_word("constraints") and self.peek(1).kind == "LBRACE"
                and self.peek(2).text not in KINDS)

    # grammar

    def parse(self) -> None:
        try:
            self.expect_word("model")
            self.name = self.expect("WORD", "model name")
            if self.at_word("root") and self.peek(1).kind == "WORD":
                self.advance()
                self.root = self.advance()
            self.expect_word("features")
            self.expect("LBRACE", "'{'")
        except _Bail:
            return
        while True:
            tok = self.peek()
            if tok.kind in ("RBRACE", "EOF") or self.at_constraint_block():
                break
            try:
                self.node()
            except _Bail:
                self.skip_node(1, tok.span.line)
        try:
            self.expect("RBRACE", "'}' closing the features block")
            if self.at_word("constraints"):
                self.advance()
                self.expect("LBRACE", "'{'")
                self.constraint_block()
            tok = self.peek()
            if tok.kind != "EOF":
                self.fail(tok, f"unexpected {tok.describe()} after the model")
        except _Bail:
            return

    def node(self) -> None:
        name = self.expect("WORD", "feature name")
        self.expect("LBRACE", f"'{{' after feature {name.text!r}")
        self.nodes.append(name)
        count = 0
        while self.peek().kind == "WORD":
            self.group(name.text)
            count += 1
        self.expect("RBRACE", "relation kind or '}'")
        if count == 0:
            self.errors.append(ParseError(
                name.span, f"feature block {name.text!r} declares no groups; "
                "leaves need no block", ErrorKind.SYNTACTIC))

    def group(self, parent: str) -> None:
        kw = self.advance()
        if kw.text not in KINDS:
            self.fail(kw, f"unknown relation kind {kw.text!r} (expected one of "
                          + ", ".join(KINDS) + ")")
        self.expect("LBRACE", f"'{{' after {kw.text!r}")
        members = []
        while self.peek().kind == "WORD":
            members.append(self.advance())
        close = self.expect("RBRACE", "feature name or '}'")
        if not members:
            self.fail(close, f"empty {kw.text} group under {parent!r}")
        self.groups.append(_Group(KINDS[kw.text], parent, members))

    def constraint_block(self) -> None:
        depth = self.depth
        while True:
            tok = self.peek()
            if tok.kind in ("RBRACE", "EOF"):
                break
            try:
                src = self.expect("WORD", "constraint source feature")
                kw = self.peek()
                if kw.kind != "WORD" or kw.text not in CONSTRAINT_KINDS:
                    self.fail(kw, f"expected 'requires' or 'excludes', found {kw.describe()}")
                self.advance()
                dst = self.expect("WORD", "constraint target feature")
                self.constraints.append((src, kw, dst))
            except _Bail:
                self.skip_line(depth, tok.span.line)
        self.expect("RBRACE", "'}' closing the constraints block")


def _semantic(p: _Parser, errors: list[ParseError]) -> Optional[FeatureModel]:
    def error(tok: Token, message: str):
        errors.append(ParseError(tok.span, message, ErrorKind.SEMANTIC))

    first: dict[str, Token] = {}
    blocks: dict[str, Token] = {}
    for node in p.nodes:
        if node.text in blocks:
            error(node, f"feature {node.text!r} has more than one block")
        else:
            blocks[node.text] = node
        first.setdefault(node.text, node)

    relations = []
    parent_of: dict[str, str] = {}
    for g in p.groups:
        seen = set()
        for m in g.members:
            first.setdefault(m.text, m)
            if m.text in seen:
                error(m, f"feature {m.text!r} listed twice in one {g.rtype.keyword} group")
            elif m.text == g.parent:
                error(m, f"feature {m.text!r} is its own child")
            elif m.text in parent_of:
                error(m, f"feature {m.text!r} already has parent {parent_of[m.text]!r}")
            else:
                parent_of[m.text] = g.parent
            seen.add(m.text)
        if g.rtype.is_group:
            if len(g.members) < 2:
                error(g.members[0], f"{g.rtype.keyword} group under {g.parent!r} needs at "
                                    "least two features")
            relations.append(Relation(g.parent, tuple(m.text for m in g.members), g.rtype))
        else:
            relations += [Relation(g.parent, (m.text,), g.rtype) for m in g.members]
    if p.root is not None:
        first.setdefault(p.root.text, p.root)

    constraints = []
    cspan: dict[int, Token] = {}
    for src, kw, dst in p.constraints:
        ok = True
        for end in (src, dst):
            if end.text not in first:
                error(end, f"constraint refers to undeclared feature {end.text!r}")
                ok = False
        if ok:
            cspan[len(constraints) + 1] = src
            constraints.append(CrossTreeConstraint(CONSTRAINT_KINDS[kw.text], src.text,
                                                   dst.text))
    if errors:
        return None
    try:
        return build_model(p.name.text, relations, constraints,
                           root=p.root.text if p.root else None)
    except StructuralError as exc:
        tok = None
        if exc.constraint is not None:
            tok = cspan.get(exc.constraint.id)
        if tok is None and exc.feature is not None:
            tok = first.get(exc.feature)
        error(tok or p.name, str(exc))
        return None


def parse(text: str) -> FeatureModel:
    """Parse model text; raises :class:`ParseFailure` listing every error found."""
    errors: list[ParseError] = []
    tokens = tokenize(text, errors)
    p = _Parser(tokens, errors)
    p.parse()
    if errors:
        raise ParseFailure(sorted(errors, key=lambda e: (e.span.line, e.span.column)))
    model = _semantic(p, errors)
    if errors:
        raise ParseFailure(errors)
    return model


def _runs(model: FeatureModel) -> Iterator[tuple[str, RelationType, list[str]]]:
    # Consecutive single-child relations of one kind under one parent share a line.
    run: Optional[tuple[str, RelationType, list[str]]] = None
    for r in model.relations:
        if run and not r.rtype.is_group and run[0] == r.parent and run[1] is r.rtype:
            run[2].extend(r.children)
            continue
        if run:
            yield run
        run = (r.parent, r.rtype, list(r.children))
    if run:
        yield run


def serialize(model: FeatureModel) -> str:
    """Canonical text for ``model``.

    Relations must be grouped by parent (as :func:`parse` produces them) for
    the output to re-parse into an identical model.
    """
    out = [f"model {model.name}"]
    if not model.relations:
        out += [f"root {model.root}", "features { }"]
    else:
        out.append("features {")
        blocks: dict[str, list[str]] = {}
        for parent, rtype, children in _runs(model):
            blocks.setdefault(parent, []).append(
                f"    {rtype.keyword} {{ {' '.join(children)} }}")
        for parent, lines in blocks.items():
            out.append(f"  {parent} {{")
            out += lines
            out.append("  }")
        out.append("}")
    if model.constraints:
        out.append("constraints {")
        out += [f"  {c.source} {c.kind.value} {c.target}" for c in model.constraints]
        out.append("}")
    return "\n".join(out) + "\n"


_GROUP_LABEL = {
    RelationType.OR: "OR",
    RelationType.ALTERNATIVE: "ALT",
    RelationType.OPTIONAL_OR: "OPT-OR",
    RelationType.OPTIONAL_ALTERNATIVE: "OPT-ALT",
}


def _q(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def export_dot(model: FeatureModel) -> str:
    out = [f"digraph {_q(model.name)} {{", "  node [shape=box];"]
    out += [f"  {_q(f)};" for f in model.features]
    for r in model.relations:
        for c in r.children:
            if r.rtype is RelationType.MANDATORY:
                attrs = "arrowhead=dot"
            elif r.rtype is RelationType.OPTIONAL:
                attrs = "arrowhead=odot"
            else:
                attrs = f"arrowhead=none, label={_q(_GROUP_LABEL[r.rtype])}"
            out.append(f"  {_q(r.parent)} -> {_q(c)} [{attrs}];")
    for c in model.constraints:
        out.append(f"  {_q(c.source)} -> {_q(c.target)} "
                   f"[style=dashed, label={_q(c.kind.value)}];")
    out.append("}")
    return "\n".join(out) + "\n"


ALLOY_TYPE = {
    RelationType.MANDATORY: "Mandatory",
    RelationType.OPTIONAL: "Optional",
    RelationType.OR: "OrFeature",
    RelationType.ALTERNATIVE: "Alternative",
    RelationType.OPTIONAL_ALTERNATIVE: "OptionalAlternative",
    RelationType.OPTIONAL_OR: "OptionalOr",
}

_ALLOY_RESERVED = frozenset("""
    abstract all and as assert but check disj else enum exactly expect extends fact for
    fun iden iff implies in Int int let lone module no none not one open or pred private
    run seq set sig some String sum this univ
    FM Name Relation Type Dependency Requires Excludes
    Mandatory Optional OrFeature Alternative OptionalAlternative OptionalOr
""".split())


def _alloy_names(model: FeatureModel) -> dict[str, str]:
    taken = set(_ALLOY_RESERVED)
    taken |= {f"c{r.id}" for r in model.relations}
    taken |= {f"d{c.id}" for c in model.constraints}
    names = {}
    for f in (model.name,) + model.features:
        if f in names:
            continue
        base = f.replace(".", "_")
        cand = base
        while cand in taken:
            cand += "_"
        taken.add(cand)
        names[f] = cand
    return names


def export_alloy(model: FeatureModel) -> str:
    """Alloy text with the feature-model schema and one fact per relation."""
    n = _alloy_names(model)
    fm = n[model.name]
    out = [
        "abstract sig Type {}",
        "one sig " + ", ".join(ALLOY_TYPE[t] for t in (
            RelationType.OPTIONAL, RelationType.MANDATORY, RelationType.OR,
            RelationType.ALTERNATIVE, RelationType.OPTIONAL_ALTERNATIVE,
            RelationType.OPTIONAL_OR)) + " extends Type {}",
        "",
        "sig Name {}",
        "",
        "sig Relation {",
        "  parent: Name,",
        "  child: set Name,",
        "  type: Type",
        "}",
        "",
        "sig FM {",
        "  features: set Name,",
        "  root: Name,",
        "  relation: set Relation",
        "}",
        "",
        "one sig " + ", ".join(n[f] for f in model.features) + " extends Name {}",
    ]
    rel = [f"c{r.id}" for r in model.relations]
    if rel:
        out.append("one sig " + ", ".join(rel) + " extends Relation {}")
    out += [
        f"one sig {fm} extends FM {{}}",
        "",
        "fact elements {",
        f"  {fm}.root = {n[model.root]}",
        f"  {fm}.features = " + " + ".join(n[f] for f in model.features),
        f"  {fm}.relation = " + (" + ".join(rel) if rel else "none"),
        "}",
    ]
    if model.relations:
        out += ["", "fact relations {"]
        for r in model.relations:
            out += [
                f"  c{r.id}.type = {ALLOY_TYPE[r.rtype]}",
                f"  c{r.id}.parent = {n[r.parent]}",
                f"  c{r.id}.child = " + " + ".join(n[c] for c in r.children),
            ]
        out.append("}")
    if model.constraints:
        out += [
            "",
            "abstract sig Dependency {",
            "  source: Name,",
            "  target: Name",
            "}",
            "sig Requires, Excludes extends Dependency {}",
        ]
        for c in model.constraints:
            kind = "Requires" if c.kind is ConstraintKind.REQUIRES else "Excludes"
            out.append(f"one sig d{c.id} extends {kind} {{}}")
        out += ["", "fact dependencies {"]
        for c in model.constraints:
            out += [f"  d{c.id}.source = {n[c.source]}", f"  d{c.id}.target = {n[c.target]}"]
        out.append("}")
    return "\n".join(out) + "\n"
