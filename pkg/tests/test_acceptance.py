"""Acceptance criteria, one test per criterion.

Each test records a pass/fail line in ``conftest.RESULTS``; the lines are
printed in the terminal summary.
"""

import itertools
import random
import time

from conftest import CORPUS, VALID_SELECTION, INVALID_SELECTION, FIXTURES, GOLDEN, RESULTS, brute_products, load
from fmtool import analysis as an
from fmtool.cli import main
from fmtool.dsl import export_alloy, export_dot, parse, serialize
from fmtool.generate import random_model
from fmtool.logic import SemanticsMode, compile_model, model_cnf, to_dimacs
from fmtool.model import Configuration, ConstraintKind, RelationType
from fmtool.sat import enumerate_solutions, oracle_enumerate, solve

CAD = str(FIXTURES / "cad.fm")
N_RANDOM = 1000
EXHAUSTIVE_UP_TO = 6
SAMPLES = 32


def _sample_configs(rng, products, n):
    """Some products, each with one feature flipped, plus uniform random picks."""
    picked = rng.sample(products, min(SAMPLES, len(products)))
    flipped = []
    for p in picked:
        i = rng.randrange(n)
        flipped.append(p[:i] + (not p[i],) + p[i + 1:])
    noise = [tuple(rng.random() < 0.5 for _ in range(n)) for _ in range(SAMPLES // 2)]
    return picked + flipped + noise


def record(n, title, ok, detail):
    RESULTS[n] = (ok, title, detail)
    assert ok, detail


def timed_main(capsys, argv):
    start = time.perf_counter()
    code = main(argv)
    elapsed = time.perf_counter() - start
    out, _ = capsys.readouterr()
    return code, out, elapsed


def test_criterion_1_valid_selection(capsys):
    code, out, t = timed_main(capsys, ["config", CAD, "--select", ",".join(VALID_SELECTION)])
    ok = code == 0 and out == "VALID\n" and t < 0.1
    record(1, "reference selection is VALID", ok, f"exit {code}, {out.strip()!r}, {t * 1000:.1f} ms")


def test_criterion_2_invalid_selection(capsys):
    code, out, t = timed_main(capsys, ["config", CAD, "--select", ",".join(INVALID_SELECTION)])
    lines = out.splitlines()
    names_it = any("v2.3.1 requires v1.1" in line for line in lines[1:])
    ok = code == 1 and lines[0] == "INVALID" and names_it and t < 0.1
    record(2, "faulty selection is INVALID", ok,
           f"exit {code}, {len(lines) - 1} violations, requires(v2.3.1, v1.1) named: {names_it}, "
           f"{t * 1000:.1f} ms")


def test_criterion_3_alloy_parity():
    m = load("cad")
    cnf = model_cnf(m)
    base = solve(cnf)
    units = [cnf.literal(f, f in INVALID_SELECTION or f == m.root) for f in m.features]
    pinned = solve(cnf, units)
    witness_ok = base.satisfiable and an.check_config(m, Configuration(
        {f: base.witness[f] for f in m.features})).valid
    ok = witness_ok and not pinned.satisfiable
    record(3, "Alloy parity", ok,
           f"model {base.status.name}, with the faulty selection as units {pinned.status.name}")


def test_criterion_4_pathologies():
    got, oracle = {}, {}
    for name in ("inconsistent", "false_optional", "dead"):
        m = load(name)
        got[name] = (an.dead_features(m), an.false_optionals(m))
        products = brute_products(m)
        cols = {f: [p[i] for p in products] for i, f in enumerate(m.features)}
        dead = tuple(f for f in m.features if not any(cols[f]))
        fo = tuple(f for f in m.features
                   if m.incoming(f) is not None
                   and m.incoming(f).rtype is not RelationType.MANDATORY
                   and f not in dead and m.parent(f) not in dead
                   and all(c for c, p in zip(cols[f], cols[m.parent(f)]) if p))
        oracle[name] = (dead, fo)
    ok = (got == oracle
          and got["inconsistent"][0] == ("v1", "v1.1", "v1.2")
          and got["dead"][0] == ("v2.1",)
          and got["false_optional"][1] == ("v2",))
    record(4, "dead and false-optional fixtures", ok,
           "dead(inconsistent)={%s} dead(dead)={%s} false-optional(false_optional)={%s}, oracle agrees: %s" % (
               ", ".join(got["inconsistent"][0]), ", ".join(got["dead"][0]),
               ", ".join(got["false_optional"][1]), got == oracle))


def test_criterion_5_cad_count():
    m = load("cad")
    oracle = oracle_enumerate(compile_model(m), m.features)
    plain = sorted(brute_products(m))
    start = time.perf_counter()
    n = an.count_products(m)
    t = time.perf_counter() - start
    listed = an.list_products(m)
    agree = list(listed.solutions) == list(oracle.solutions) == plain
    ok = n == len(oracle) == 74 and agree and t < 1.0
    record(5, "CAD product count", ok,
           f"count {n}, oracle {len(oracle)}, element-for-element: {agree}, {t * 1000:.1f} ms")


def _vp_requires_edges(m):
    """(vp1, y) pairs where vp1 requires vp2, both are variation points and y
    is a mandatory child of vp2."""
    for c in m.constraints:
        if c.kind is not ConstraintKind.REQUIRES:
            continue
        if not m.children(c.source) or not m.children(c.target):
            continue
        for r in m.relations:
            if r.parent == c.target and r.rtype is RelationType.MANDATORY:
                yield c.source, r.children[0]


def _check_generated(seed, failures, stats):
    m = random_model(seed)
    rng = random.Random(seed)
    idx = {f: i for i, f in enumerate(m.features)}
    for mode in SemanticsMode:
        products = enumerate_solutions(model_cnf(m, mode), m.features)
        oracle = oracle_enumerate(compile_model(m, mode), m.features)
        # (a)
        if products.solutions != oracle.solutions:
            failures.append((seed, mode, "a"))
        product_set = set(products.solutions)
        # (b)
        n = len(m.features)
        if n <= EXHAUSTIVE_UP_TO:
            candidates = list(itertools.product((False, True), repeat=n))
        else:
            candidates = _sample_configs(rng, products.solutions, n)
        for bits in candidates:
            valid = an.check_config(m, Configuration(dict(zip(m.features, bits))), mode).valid
            if valid != (bits in product_set):
                failures.append((seed, mode, "b"))
                break
        stats["configs"] += len(candidates)
        if not products.solutions:
            stats["void"] += 1
            continue
        # (c)
        core, dead = set(an.core_features(m, mode)), set(an.dead_features(m, mode))
        for f in m.features:
            c = an.commonality(m, f, mode)
            share = sum(p[idx[f]] for p in products.solutions)
            if c * len(products) != share or (c == 1) != (f in core) or (c == 0) != (f in dead):
                failures.append((seed, mode, "c"))
                break
        # (d)
        if mode is SemanticsMode.STRICT:
            for p in products.solutions:
                if any(p[idx[f]] and not p[idx[m.parent(f)]] for f in m.features[1:]):
                    failures.append((seed, mode, "d"))
                    break
            # (e)
            for vp1, y in _vp_requires_edges(m):
                stats["vp_requires"] += 1
                members = [vp1, *m.children(vp1)]
                for p in products.solutions:
                    if any(p[idx[x]] for x in members) and not p[idx[y]]:
                        failures.append((seed, mode, "e"))
                        break


def test_criterion_6_property_suite():
    failures = []
    stats = {"configs": 0, "void": 0, "vp_requires": 0}
    start = time.perf_counter()
    for seed in range(N_RANDOM):
        _check_generated(seed, failures, stats)
    t = time.perf_counter() - start
    ok = not failures and t < 60 and stats["vp_requires"] > 0
    record(6, "property suite", ok,
           f"{N_RANDOM} models x 2 semantics, {stats['configs']} configurations checked, "
           f"{stats['vp_requires']} vp-requires-vp edges, {stats['void']} void, "
           f"{len(failures)} failures {failures[:5]}, {t:.1f} s")


def _goldens():
    m = load("cad")
    return {
        "cad.canonical.fm": serialize(m),
        "cad.dot": export_dot(m),
        "cad.als": export_alloy(m),
        "cad.strict.cnf": to_dimacs(model_cnf(m)),
        "single.canonical.fm": serialize(load("single")),
    }


def test_criterion_7_round_trip():
    bad = []
    models = [load(name) for name in CORPUS] + [random_model(s) for s in range(N_RANDOM)]
    for m in models:
        text = serialize(m)
        again = parse(text)
        if again != m or serialize(again) != text:
            bad.append(m.name)
    first, second = _goldens(), _goldens()
    stable = first == second and all(
        (GOLDEN / name).read_text() == text for name, text in first.items())
    ok = not bad and stable
    record(7, "round trip", ok,
           f"{len(models)} models, {len(bad)} mismatches, "
           f"{len(first)} goldens byte-stable: {stable}")
