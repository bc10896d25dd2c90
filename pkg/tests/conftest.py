import itertools
from pathlib import Path

import pytest

from fmtool.dsl import parse
from fmtool.logic import SemanticsMode, compile_model, evaluate

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = Path(__file__).parent / "golden"

CORPUS = ["cad", "inconsistent", "false_optional", "dead", "void", "single", "vp_requires"]

VALID_SELECTION = ["v1", "v1.1", "v2", "v2.1", "v2.3", "v2.3.1", "v2.4", "v3", "v3.2"]
INVALID_SELECTION = ["v1", "v1.2", "v2", "v2.3", "v2.3.1", "v2.4", "v3", "v3.1"]


def load(name):
    return parse((FIXTURES / f"{name}.fm").read_text())


def brute_products(m, mode=SemanticsMode.STRICT):
    """Products by plain itertools enumeration and scalar evaluation."""
    f = compile_model(m, mode)
    out = []
    for bits in itertools.product((False, True), repeat=len(m.features)):
        if evaluate(f, dict(zip(m.features, bits))):
            out.append(bits)
    return out


@pytest.fixture(scope="session")
def cad():
    return load("cad")


@pytest.fixture(scope="session")
def cad_products(cad):
    return brute_products(cad)


# acceptance criterion number -> (passed, title, detail); filled by test_acceptance
RESULTS = {}


def pytest_terminal_summary(terminalreporter):
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(RESULTS):
        ok, title, detail = RESULTS[key]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {key}. {title}: {detail}")
