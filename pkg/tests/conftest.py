import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("fklab", max_examples=60, deadline=None)
settings.load_profile("fklab")


@pytest.fixture
def zero():
    from fklab.model import preset
    return preset("zero_potential")


@pytest.fixture
def strong():
    from fklab.model import preset
    return preset("strong_potential")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


acceptance_key = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """Record one pass/fail line per acceptance criterion.

    Usage: ``criterion(n, ok, detail)``; the line is printed immediately and
    again in the terminal summary, and the test then asserts ``ok``.
    """
    lines = request.config.stash.setdefault(acceptance_key, [])

    def record(n, ok, detail):
        line = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(acceptance_key, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split(":")[0].split()[1])):
            terminalreporter.write_line(line)
