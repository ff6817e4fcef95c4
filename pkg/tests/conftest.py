from contextlib import contextmanager

import numpy as np
import pytest

_RESULTS = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_RESULTS] = []


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def criterion(request):
    """Context manager recording one PASS/FAIL line per acceptance criterion."""
    results = request.config.stash[_RESULTS]

    @contextmanager
    def run(num, title):
        detail = {}
        try:
            yield detail
        except BaseException as exc:
            msg = str(exc).strip().splitlines()
            results.append((num, title, False, msg[0] if msg else type(exc).__name__))
            print(f"criterion {num:>2}: FAIL  {title}")
            raise
        results.append((num, title, True, detail.get("info", "")))
        print(f"criterion {num:>2}: PASS  {title}  {detail.get('info', '')}")

    return run


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    rows = sorted(config.stash.get(_RESULTS, []))
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    for num, title, ok, info in rows:
        terminalreporter.write_line(f"criterion {num:>2}: {'PASS' if ok else 'FAIL'}  {title}  {info}")
