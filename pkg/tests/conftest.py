import numpy as np
import pytest

from magorbit.liealg import so, su
from magorbit.orbit import OrbitContext

SU3_REGULAR_A = np.array([0, 0, 1, 0, 0, 0, 0, 0.5])
SU3_REGULAR_B = np.array([0, 0, 0.3, 0, 0, 0, 0, -0.8])
SU3_SINGULAR_A = np.array([0, 0, 0, 0, 0, 0, 0, 1.0])


@pytest.fixture(scope="session")
def so3():
    return so(3)


@pytest.fixture(scope="session")
def su3():
    return su(3)


@pytest.fixture(scope="session")
def so3_ctx(so3):
    return OrbitContext.create(so3, [0.0, 0.0, 1.0])


@pytest.fixture(scope="session")
def su3_ctx(su3):
    return OrbitContext.create(su3, SU3_REGULAR_A)


@pytest.fixture(scope="session")
def su3_singular_ctx(su3):
    return OrbitContext.create(su3, SU3_SINGULAR_A)


@pytest.fixture
def rng():
    return np.random.default_rng(20260101)


@pytest.fixture(scope="session")
def su3_pendulum_run(su3_ctx):
    """su(3) regular orbit, eps = 0.7, regular b, h = 1e-3, t in [0, 10]."""
    from magorbit.dynamics import MagneticSetup, simulate_pendulum
    from magorbit.orbit import random_phase_point

    pt0 = random_phase_point(su3_ctx, 11)
    setup = MagneticSetup(0.7, SU3_REGULAR_B)
    traj = simulate_pendulum(su3_ctx, pt0, setup, t_end=10.0, h=1e-3, project_every=10)
    return pt0, setup, traj


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for k in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[k])
