from fractions import Fraction
from pathlib import Path

import pytest

from cubic_euclid import fio
from cubic_euclid.cli import bundled_fields
from cubic_euclid.exactfield import FieldElement

FIXTURES = Path(__file__).parent / "fixtures"

# (criterion, passed, detail) rows filled by test_acceptance.py
ACCEPTANCE: list[tuple[str, bool, str]] = []


def field_path(name: str) -> Path:
    return bundled_fields() / name


def load_field(name: str):
    return fio.read_disc(field_path(name)).to_field()


def F(*xs) -> FieldElement:
    return FieldElement(*(Fraction(x) for x in xs))


@pytest.fixture(scope="session")
def K985():
    return load_field("985")


@pytest.fixture(scope="session")
def K23():
    return load_field("_23")


@pytest.fixture(scope="session")
def K49():
    return load_field("49")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE:
        terminalreporter.write_line("%s %s  %s" % ("PASS" if ok else "FAIL", name, detail))
