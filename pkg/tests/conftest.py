import sys

import pytest

from asl.conditions import MG_SEQUENCE, SIPM_SEQUENCE, verify_conditions
from asl.eigensolver import build_recursion, normalize, solve_sigma
from asl.spectral import GevreyParams
from asl.symbols import ipm_symbol, mg_symbol


@pytest.fixture(scope="session")
def mg0():
    return mg_symbol({"Omega": 1.0, "beta2_over_eta": 1.0}, 0.0)


@pytest.fixture(scope="session")
def ipm0():
    return ipm_symbol(0.0)


@pytest.fixture(scope="session")
def sipm1():
    return ipm_symbol(1.0)


@pytest.fixture(scope="session")
def gp():
    return GevreyParams(1.0, 0.1, 4.0)


@pytest.fixture(scope="session")
def mg_report(mg0):
    return verify_conditions(mg0, 1, MG_SEQUENCE, (3, -2, 1), 20, 200)


@pytest.fixture(scope="session")
def sipm_report(sipm1):
    return verify_conditions(sipm1, 1, SIPM_SEQUENCE, (2, -1, 1), 50, 400)


@pytest.fixture(scope="session")
def mg11(mg0, gp):
    rec = build_recursion(mg0, 1, (1, 1), 200)
    return rec, normalize(solve_sigma(rec), rec, gp)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        ok, detail = results[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
