import pytest

from vstar import SimConfig, simulate

DESK_N = 1_000_000
DESK_T = 15
DESK_SEED = 20240601


def _desk(sigma):
    return simulate(SimConfig(n=DESK_N, t=DESK_T, sigma_high=sigma, seed=DESK_SEED), threads=4)


@pytest.fixture(scope="session")
def desk_runs():
    """Lazily simulated desk-scale snapshots, shared across test modules."""
    cache = {}

    def get(sigma):
        if sigma not in cache:
            cache[sigma] = _desk(sigma)
        return cache[sigma]

    return get


@pytest.fixture(scope="session")
def snap_sigma3(desk_runs):
    return desk_runs(3.0)


@pytest.fixture(scope="session")
def snap_sigma4(desk_runs):
    return desk_runs(4.0)


_CRITERIA = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or rep.when not in ("setup", "call"):
        return
    num, title = marker.args
    prev = _CRITERIA.get(num, (title, "PASS"))[1]
    failed = rep.failed or (rep.when == "setup" and not rep.passed)
    if rep.when == "call" or failed:
        _CRITERIA[num] = (title, "FAIL" if failed or prev == "FAIL" else "PASS")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_CRITERIA):
        title, status = _CRITERIA[num]
        terminalreporter.write_line(f"{status}  criterion {num:>2}: {title}")
