import os

import pytest

from lvego.algorithms import run_algorithm
from lvego.bench.store import ResultStore

_CRITERIA: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def criterion():
    """Record one acceptance verdict, then assert it."""

    def record(number: int, ok: bool, detail: str):
        _CRITERIA[number] = (bool(ok), detail)
        assert ok, f"criterion {number}: {detail}"

    return record


class RunCache:
    """Full-budget runs shared by the end-to-end criteria.

    Set LVEGO_ACCEPTANCE_STORE to a directory to keep the histories between
    sessions; runs are deterministic, so a stored file equals a fresh run of
    the same code.
    """

    def __init__(self, root=None):
        self.store = ResultStore(root) if root else None
        self.runs = {}

    def get(self, problem: str, algorithm: str, seed: int):
        key = (problem, algorithm, seed)
        if key not in self.runs:
            path = None
            if self.store is not None:
                path = self.store.root / f"{problem}-{algorithm}-{seed}.json"
            if path is not None and path.exists():
                self.runs[key] = self.store.load(path.name)
            else:
                self.runs[key] = run_algorithm(problem, algorithm, seed)
                if self.store is not None:
                    self.store.write(self.runs[key])
        return self.runs[key]

    def many(self, problem: str, algorithm: str, seeds=range(10)):
        return [self.get(problem, algorithm, s) for s in seeds]


@pytest.fixture(scope="session")
def e2e():
    return RunCache(os.environ.get("LVEGO_ACCEPTANCE_STORE"))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        ok, detail = _CRITERIA[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
