from __future__ import annotations

import numpy as np
import pytest
from hypothesis import settings

from toeplab.symbol import LaurentSymbol

# Property tests draw the same examples on every run.
settings.register_profile("repeatable", derandomize=True, print_blob=True)
settings.load_profile("repeatable")

# One line per acceptance criterion, filled in by tests/test_acceptance.py and
# printed at the end of the session.
CRITERIA: dict[int, tuple[bool, str]] = {}


def record_criterion(number: int, passed: bool, detail: str):
    CRITERIA[number] = (bool(passed), detail)


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(CRITERIA):
        passed, detail = CRITERIA[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def three_term():
    """``2i t + t^-2 + 0.7 t^-3``."""
    return LaurentSymbol.from_coeffs({1: 2j, -2: 1.0, -3: 0.7})


@pytest.fixture(scope="session")
def five_term():
    """``2 t^3 - t^2 + 2i t - 4 t^-2 - 2i t^-3``."""
    return LaurentSymbol.from_coeffs({3: 2.0, 2: -1.0, 1: 2j, -2: -4.0, -3: -2j})


@pytest.fixture(scope="session")
def shift():
    return LaurentSymbol.from_coeffs({1: 1.0})


@pytest.fixture(scope="session")
def jordan():
    return LaurentSymbol.from_coeffs({-1: 1.0})


@pytest.fixture(scope="session")
def cosine():
    return LaurentSymbol.from_coeffs({1: 1.0, -1: 1.0})


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
