import numpy as np
import pytest

from holstein_ec import LatticeSpec


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def lattice(ns, np_, omega, lam, **kw):
    return LatticeSpec.from_lambda(ns, np_, omega, lam, **kw)


_ACCEPTANCE: list[str] = []


class _Criterion:
    def __init__(self, number, title):
        self.number, self.title, self.detail = number, title, ""

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        status = "PASS" if exc_type is None else "FAIL"
        line = f"[criterion {self.number}] {status}: {self.title}"
        if self.detail:
            line += f" -- {self.detail}"
        _ACCEPTANCE.append(line)
        print(line)
        return False


@pytest.fixture
def criterion():
    return _Criterion


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip("]"))):
            terminalreporter.write_line(line)
