"""``fm`` command-line front end.

Exit codes: 0 success / positive verdict, 1 negative verdict (invalid
configuration, void model, dead features), 2 usage, I/O or parse error.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional, Sequence

from . import analysis
from .dsl import ParseFailure, export_alloy, export_dot, parse, serialize
from .logic import STRUCTURAL, SemanticsMode, model_cnf, to_dimacs
from .model import CrossTreeConstraint, Element, FeatureModel, UnknownFeature, make_config

SCHEMA = "fm/1"
DEFAULT_LIMIT = 10_000


class _Fatal(Exception):
    pass


def element_json(e: Element) -> dict:
    if isinstance(e, CrossTreeConstraint):
        return {"kind": e.kind.value, "source": e.source, "target": e.target, "id": e.id}
    return {"kind": e.rtype.keyword, "parent": e.parent, "children": list(e.children),
            "id": e.id}


def _violation_json(v: analysis.Violation) -> dict:
    if v.source == STRUCTURAL:
        out = {"kind": "root"}
    else:
        out = element_json(v.source)
    out["formula"] = v.formula
    return out


def _names(items: Sequence[str]) -> str:
    return ", ".join(items) if items else "none"


def _load(path: str) -> FeatureModel:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise _Fatal(f"fm: error: cannot read {path}: {exc.strerror or exc}") from None
    try:
        return parse(text)
    except ParseFailure as exc:
        raise _Fatal("\n".join(f"{path}:{e}" for e in exc.errors)) from None


def _emit_json(doc: dict) -> None:
    print(json.dumps(doc, indent=2))


def _header(m: FeatureModel, mode: SemanticsMode) -> dict:
    return {"schema": SCHEMA, "model": m.name, "semantics": mode.value}


def cmd_check(args, m: FeatureModel, mode: SemanticsMode) -> int:
    void = analysis.is_void(m, mode)
    summary = (f"{m.name}: {len(m.features)} features, {len(m.relations)} relations, "
               f"{len(m.constraints)} constraints")
    print(("VOID " if void else "OK ") + summary)
    return 1 if void else 0


def cmd_analyze(args, m: FeatureModel, mode: SemanticsMode) -> int:
    report = analysis.analyze(m, mode)
    if report.void:
        core, n = (), 0
    else:
        core, n = analysis.core_features(m, mode), analysis.count_products(m, mode)
    if args.json:
        health = {"void": report.void, "dead": list(report.dead),
                  "false_optional": list(report.false_optional),
                  "explanations": {f: [element_json(e) for e in es]
                                   for f, es in report.implicated.items()}}
        if report.void:
            health["void_explanation"] = [element_json(e) for e in report.void_explanation]
        _emit_json({**_header(m, mode), "health": health, "core": list(core), "count": n})
    else:
        print(f"model: {m.name}")
        print(f"semantics: {mode.value}")
        print(f"void: {'yes' if report.void else 'no'}")
        if report.void:
            print("  because: " + "; ".join(map(str, report.void_explanation)))
        print(f"dead: {_names(report.dead)}")
        for f in report.dead:
            print(f"  {f} because: " + "; ".join(map(str, report.implicated[f])))
        print(f"false optional: {_names(report.false_optional)}")
        for f in report.false_optional:
            print(f"  {f} because: " + "; ".join(map(str, report.implicated[f])))
        print(f"core: {_names(core)}")
        print(f"products: {n}")
    return 1 if report.void or report.dead else 0


def _selection(m: FeatureModel, raw: str) -> list[str]:
    names = [s.strip() for s in raw.split(",") if s.strip()]
    unknown = [s for s in names if s not in m]
    if unknown:
        raise _Fatal("fm: error: unknown feature(s): " + ", ".join(unknown))
    return names


def cmd_config(args, m: FeatureModel, mode: SemanticsMode) -> int:
    selected = _selection(m, args.select)
    if args.partial:
        result = analysis.propagate(m, make_config(m, selected, total=False), mode)
        if args.json:
            _emit_json({**_header(m, mode), "propagation": {
                "conflict": result.conflict, "forced_in": list(result.forced_in),
                "forced_out": list(result.forced_out), "free": list(result.free)}})
        elif result.conflict:
            print("CONFLICT")
        else:
            print(f"forced in: {_names(result.forced_in)}")
            print(f"forced out: {_names(result.forced_out)}")
            print(f"free: {_names(result.free)}")
        return 1 if result.conflict else 0
    verdict = analysis.check_config(m, make_config(m, selected), mode)
    if args.json:
        _emit_json({**_header(m, mode), "verdict": {
            "valid": verdict.valid,
            "violations": [_violation_json(v) for v in verdict.violations]}})
    else:
        print("VALID" if verdict.valid else "INVALID")
        for v in verdict.violations:
            print(f"  violated: {v.source}  [{v.formula}]")
    return 0 if verdict.valid else 1


def cmd_products(args, m: FeatureModel, mode: SemanticsMode) -> int:
    sols = analysis.list_products(m, mode, args.limit)
    if args.json:
        _emit_json({**_header(m, mode), "products": [list(s) for s in sols.selections()],
                    "truncated": sols.truncated, "count": len(sols)})
    else:
        for s in sols.selections():
            print(",".join(s))
    if sols.truncated:
        print(f"fm: output truncated at {args.limit} products", file=sys.stderr)
    return 0


def cmd_count(args, m: FeatureModel, mode: SemanticsMode) -> int:
    n = analysis.count_products(m, mode)
    if args.json:
        _emit_json({**_header(m, mode), "count": n})
    else:
        print(n)
    return 0


def cmd_export(args, m: FeatureModel, mode: SemanticsMode) -> int:
    if args.format == "dot":
        text = export_dot(m)
    elif args.format == "alloy":
        text = export_alloy(m)
    elif args.format == "dimacs":
        text = to_dimacs(model_cnf(m, mode))
    else:
        text = serialize(m)
    sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fm", description="Feature model analysis.")
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name, func, help, json_flag=True):
        p = sub.add_parser(name, help=help)
        p.add_argument("file", help="feature model file")
        p.add_argument("--semantics", choices=[s.value for s in SemanticsMode],
                       default=SemanticsMode.STRICT.value)
        if json_flag:
            p.add_argument("--json", action="store_true", help="machine-readable output")
        p.set_defaults(func=func)
        return p

    command("check", cmd_check, "parse, validate and check the model is not void",
            json_flag=False)
    command("analyze", cmd_analyze, "void / dead / false-optional report")
    p = command("config", cmd_config, "check a configuration")
    p.add_argument("--select", required=True, help="comma-separated selected features")
    p.add_argument("--partial", action="store_true",
                   help="treat unselected features as undecided and propagate")
    p = command("products", cmd_products, "list products")
    p.add_argument("--limit", type=int, default=DEFAULT_LIMIT)
    command("count", cmd_count, "count products")
    p = command("export", cmd_export, "export the model", json_flag=False)
    p.add_argument("--format", required=True, choices=["dot", "alloy", "dimacs", "canonical"])
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        m = _load(args.file)
        return args.func(args, m, SemanticsMode(args.semantics))
    except _Fatal as exc:
        print(exc, file=sys.stderr)
        return 2
    except UnknownFeature as exc:
        print(f"fm: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
