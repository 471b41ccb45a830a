import pytest

from sepstar.potential import PotentialSpec


def quartic_potential() -> PotentialSpec:
    """Phi_{-1} = z zbar + z^2 zbar^2, Phi_0 = z zbar, base point 0."""
    return PotentialSpec(1, {-1: {((1,), (1,)): 1, ((2,), (2,)): 1}, 0: {((1,), (1,)): 1}})


def rich_potential() -> PotentialSpec:
    return PotentialSpec(
        1,
        {-1: {((1,), (1,)): 2, ((2,), (1,)): 1, ((1,), (2,)): "1/2", ((2,), (2,)): 3,
              ((3,), (1,)): "-1/3", ((1,), (3,)): 1},
         0: {((1,), (1,)): 1, ((2,), (1,)): "2/3", ((1,), (2,)): -1},
         1: {((1,), (1,)): "1/5", ((2,), (2,)): 1, ((1,), (2,)): 1},
         2: {((2,), (1,)): 1}},
        [["1/2", "1/3"]],
    )


def two_dim_potential() -> PotentialSpec:
    return PotentialSpec(
        2,
        {-1: {((1, 0), (1, 0)): 1, ((0, 1), (0, 1)): 2, ((1, 1), (1, 0)): 1, ((1, 0), (1, 1)): 1,
              ((1, 0), (0, 1)): "1/3", ((2, 0), (2, 0)): 1},
         0: {((1, 0), (0, 1)): 1, ((1, 1), (1, 1)): 1},
         1: {((2, 0), (0, 1)): 1}},
        [1, 0],
    )


@pytest.fixture(scope="session")
def flat():
    return PotentialSpec.flat(1)


@pytest.fixture(scope="session")
def quartic():
    return quartic_potential()


@pytest.fixture(scope="session")
def rich():
    return rich_potential()


@pytest.fixture(scope="session")
def planar():
    return two_dim_potential()


_criteria: dict[str, tuple[int, str, str]] = {}


def pytest_runtest_logreport(report):
    marker = getattr(report, "criterion", None)
    if marker is None or (report.when != "call" and not report.failed and not report.skipped):
        return
    n, title = marker
    if hasattr(report, "wasxfail"):
        status = "XFAIL"
    elif report.passed:
        status = "PASS"
    elif report.skipped:
        status = "SKIP"
    else:
        status = "FAIL"
    _criteria[report.nodeid] = (n, title, status)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    m = item.get_closest_marker("criterion")
    if m is not None:
        outcome.get_result().criterion = m.args


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n, title, status in sorted(_criteria.values()):
        terminalreporter.write_line(f"criterion {n:>2} {status:<5} {title}")
