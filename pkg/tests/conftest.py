import numpy as np
import pytest

from ufmcollapse.core import ProblemDims


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_dims():
    return ProblemDims(K=3, d=5, n=4)


_ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture
def criterion(request):
    """Record one acceptance line; parts of the same criterion are merged in the summary."""
    store = request.config.stash.setdefault(_ACCEPTANCE, {})

    def record(number: int, label: str, checks: list[tuple[str, float, float]], seconds: float):
        ok = all(value <= limit for _, value, limit in checks)
        detail = "; ".join(f"{name}={value:.3e} (<= {limit:.0e})" for name, value, limit in checks)
        line = f"criterion {number} [{label}]: {'PASS' if ok else 'FAIL'} {detail}; {seconds:.1f}s"
        print(line)
        store.setdefault(number, []).append((ok, line))
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = config.stash.get(_ACCEPTANCE, None)
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(store):
        for _, line in store[number]:
            terminalreporter.write_line(line)
    terminalreporter.write_line("")
    for number in sorted(store):
        ok = all(part for part, _ in store[number])
        terminalreporter.write_line(f"CRITERION {number}: {'PASS' if ok else 'FAIL'}")
