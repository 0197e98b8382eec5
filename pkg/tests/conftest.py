import numpy as np
import pytest

from feddc.datagen import Dataset


@pytest.fixture
def indexed_pool():
    """Pool whose first feature is the sample's index, so identity survives shuffling."""

    def make(n, dim=2):
        X = np.zeros((n, dim))
        X[:, 0] = np.arange(n)
        return Dataset(X, np.arange(n) % 2)

    return make


_VERDICTS = []


@pytest.fixture
def verdict():
    """Record one acceptance verdict line (plus optional detail lines) for the run summary."""

    def record(name, ok, summary, seconds=None, details=()):
        took = f" ({seconds:.1f}s)" if seconds is not None else ""
        line = f"{name} {'PASS' if ok else 'FAIL'}: {summary}{took}"
        _VERDICTS.append((line, list(details)))
        print(line)
        for d in details:
            print("    " + d)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for line, details in sorted(_VERDICTS, key=lambda v: int(v[0].split()[0][1:].split("-")[0])):
        terminalreporter.write_line(line)
        for d in details:
            terminalreporter.write_line("    " + d)
