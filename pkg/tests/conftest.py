import json
from pathlib import Path

import pytest

from pottscayley.model import ThetaParams

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def five_fixture():
    return json.loads((FIXTURES / "five_solution.json").read_text())


@pytest.fixture(scope="session")
def five_thetas(five_fixture):
    return ThetaParams(**five_fixture["thetas"])


_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report():
    """Record one acceptance line; echoed live and again in the terminal summary."""

    def emit(label: str, ok: bool, detail: str = "") -> bool:
        line = f"[{'PASS' if ok else 'FAIL'}] {label}" + (f": {detail}" if detail else "")
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return emit


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
