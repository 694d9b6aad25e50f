import os
from pathlib import Path

import pytest
from hypothesis import settings

# compiled kernels load lazily; the first example of a property test pays for it
settings.register_profile("mlsw", deadline=None, max_examples=50)
settings.load_profile("mlsw")


@pytest.fixture(scope="session")
def reference_dir() -> Path:
    """Cache directory for RK3 reference runs (``MLSW_REFERENCE_DIR`` overrides)."""
    path = Path(os.environ.get("MLSW_REFERENCE_DIR", Path(__file__).resolve().parent.parent / ".reference_cache"))
    path.mkdir(parents=True, exist_ok=True)
    return path


_VERDICTS = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_VERDICTS] = []


@pytest.fixture
def verdict(request):
    """Record a PASS/FAIL line for an acceptance criterion and fail the test on FAIL."""
    lines = request.config.stash[_VERDICTS]

    def report(label: str, ok: bool, detail: str) -> None:
        line = f"{'PASS' if ok else 'FAIL'} {label}: {detail}"
        lines.append(line)
        print(line)
        assert ok, line

    return report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_VERDICTS, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
