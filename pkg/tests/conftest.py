import contextlib
import time

import pytest

from hookcost import kernels

_RESULTS = pytest.StashKey[dict]()


@pytest.fixture(params=sorted(kernels.BACKENDS))
def backend(request, monkeypatch):
    """Run the test once per available stack kernel."""
    monkeypatch.setattr(kernels, "evaluate_encoded", kernels.BACKENDS[request.param])
    return request.param


def pytest_configure(config):
    config.stash[_RESULTS] = {}


@pytest.fixture
def acceptance(request):
    """Context manager recording a PASS/FAIL line for one acceptance criterion."""

    @contextlib.contextmanager
    def record(number: int, title: str):
        results = request.config.stash[_RESULTS]
        t0 = time.perf_counter()
        try:
            yield
        except BaseException as exc:
            results[number] = ("FAIL", title, time.perf_counter() - t0, f"{type(exc).__name__}")
            raise
        results[number] = ("PASS", title, time.perf_counter() - t0, "")

    return record


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash.get(_RESULTS, {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        verdict, title, secs, why = results[n]
        extra = f"  ({why})" if why else ""
        terminalreporter.write_line(f"{verdict}  AC{n:<2} {title}  [{secs:.2f}s]{extra}")
