import contextlib

_acceptance_results: list[tuple[str, str]] = []


class _Recorder:
    @contextlib.contextmanager
    def __call__(self, name: str):
        try:
            yield
        except BaseException:
            _acceptance_results.append((name, "FAIL"))
            raise
        _acceptance_results.append((name, "PASS"))


import pytest


@pytest.fixture
def acceptance():
    return _Recorder()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _acceptance_results:
        terminalreporter.section("acceptance criteria")
        for name, status in _acceptance_results:
            terminalreporter.write_line(f"{status}  {name}")
