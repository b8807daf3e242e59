import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from cproj_lab import catalog

settings.register_profile("lab", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture])
settings.load_profile("lab")


@pytest.fixture(scope="session")
def flat2():
    return catalog.flat(2)


@pytest.fixture(scope="session")
def fs1():
    return catalog.fubini_study(1)


@pytest.fixture(scope="session")
def fs2():
    return catalog.fubini_study(2)


@pytest.fixture(scope="session")
def rf():
    """The Ricci-flat example as a catalog entry."""
    return catalog.build({"construct": "catalog", "key": "ricciflat4d"})


@pytest.fixture(scope="session")
def rf_gt(rf):
    from cproj_lab.cproj import metric_from_solution
    return metric_from_solution(rf.ks.g, rf.solution.A, rf.ks.sample(10))


def central_diff(f, p, h=1e-5):
    """Central differences of an array-valued function; derivative axis last."""
    p = np.asarray(p, dtype=float)
    cols = []
    for i in range(len(p)):
        e = np.zeros_like(p)
        e[i] = h
        cols.append((np.asarray(f(p + e)) - np.asarray(f(p - e))) / (2 * h))
    return np.stack(cols, axis=-1)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for k in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[k])
