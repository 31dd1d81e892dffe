import json
from pathlib import Path

import numpy as np
import pytest

from lrloc.disorder import DistributionSpec
from lrloc.hamiltonian import OperatorSpec
from lrloc.lattice import Cube

FIXTURES = Path(__file__).parent / "fixtures"
_CRITERIA = []


@pytest.fixture(scope="session")
def seeds():
    return json.loads((FIXTURES / "seeds.json").read_text())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def criterion():
    """Record one acceptance line: criterion(number, passed, detail)."""

    def record(number, passed, detail=""):
        _CRITERIA.append((number, bool(passed), detail))
        return passed

    return record


def make_op(lam=50.0, r=8.0, d=1, seed=0, M=1.0):
    return OperatorSpec(d, r, lam, DistributionSpec("uniform", M), seed)


def box(radius, d=1):
    return Cube.around((0,) * d, radius, d)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number, passed, detail in sorted(_CRITERIA, key=lambda c: (c[0], c[2])):
        terminalreporter.write_line(f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}")
