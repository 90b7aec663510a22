import pytest

from bdtiles.construction import NestedFamily
from bdtiles.rulefile import bundled_rule
from bdtiles.spectral import rule_report

ACCEPTANCE = {}


@pytest.fixture(scope="session")
def rule():
    return bundled_rule()


@pytest.fixture(scope="session")
def report(rule):
    return rule_report(rule, (0, 1), (2, 0))


@pytest.fixture(scope="session")
def family(rule, report):
    return NestedFamily(rule, rule.named_patches["R1"], rule.named_patches["S1"], report)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: (int(k.split(".")[0]), k)):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}")
