import numpy as np
import pytest

from qubovqa import statevector as sv
from qubovqa.data import LabeledDataset


def random_dataset(r: int, m: int, seed: int) -> LabeledDataset:
    rng = np.random.default_rng(seed)
    x = rng.uniform(0.05, 1.0, (r, m))
    y = np.arange(r) % 2
    return LabeledDataset(x, rng.permutation(y))


@pytest.fixture
def example_circuit():
    return sv.build_example_circuit()


@pytest.fixture
def twolocal():
    return sv.build_twolocal(2, 1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report():
    """Record one pass/fail line per acceptance criterion, then assert it."""
    def _report(number: int, ok: bool, detail: str):
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line
    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
