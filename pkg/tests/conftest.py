import mpmath
import pytest
from hypothesis import HealthCheck, settings

from padelab.potential import IntervalSystem, solve_equilibrium
from padelab.testfn import TestFunctionSpec, germ_at_infinity

settings.register_profile(
    "padelab",
    deadline=None,
    max_examples=25,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("padelab")

P = 512


@pytest.fixture(scope="session")
def ref_spec():
    return TestFunctionSpec.sqrt_product(2, 3)


@pytest.fixture(scope="session")
def ref_germ(ref_spec):
    return germ_at_infinity(ref_spec, 128, P)


@pytest.fixture(scope="session")
def unit_eq():
    return solve_equilibrium(IntervalSystem((-1.0, 1.0)))


@pytest.fixture(scope="session")
def two_eq():
    return solve_equilibrium(IntervalSystem((-2.0, -1.0, 1.0, 2.0)))


def close(a, b, tol):
    return abs(mpmath.mpc(a) - mpmath.mpc(b)) <= tol
