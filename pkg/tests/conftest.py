import pytest

from stiffstep import kernels

# criterion number -> (title, passed)
ACCEPTANCE: dict[int, tuple[str, bool]] = {}


@pytest.fixture(scope="session", autouse=True)
def compiled_kernels():
    """Compile every kernel once so timed tests measure run time, not JIT."""
    kernels.warmup()


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None or call.when != "call":
        return
    num, title = marker.args
    ok = call.excinfo is None
    prev = ACCEPTANCE.get(num)
    ACCEPTANCE[num] = (title, ok and (prev is None or prev[1]))


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(num, title): acceptance criterion")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        title, ok = ACCEPTANCE[num]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {num:2d}. {title}")
