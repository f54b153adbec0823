import numpy as np
import pytest

from nlchafee.model import (
    ProblemSpec,
    affine_diffusion,
    builtin_cubic,
    constant_diffusion,
    make_nonlinearity,
)


@pytest.fixture(scope="session")
def cubic():
    return builtin_cubic()


@pytest.fixture(scope="session")
def linear_nl():
    # test-only nonlinearity without a separatrix: f(u) = u, F = u^2/2
    return make_nonlinearity(
        f=lambda u: np.asarray(u, dtype=float),
        f_prime=lambda u: np.ones_like(np.asarray(u, dtype=float)),
        F=lambda u: 0.5 * np.asarray(u, dtype=float) ** 2,
        odd=True, growth_p=2.0, name="linear",
    )


@pytest.fixture(scope="session")
def asym_nl():
    # non-odd instance: cubic with different quartic wells on each side
    b = 2.0

    def f(u):
        u = np.asarray(u, dtype=float)
        return np.where(u >= 0, u - u**3, u - b * u**3)

    def fp(u):
        u = np.asarray(u, dtype=float)
        return np.where(u >= 0, 1 - 3 * u * u, 1 - 3 * b * u * u)

    def F(u):
        u = np.asarray(u, dtype=float)
        return np.where(u >= 0, u * u / 2 - u**4 / 4, u * u / 2 - b * u**4 / 4)

    return make_nonlinearity(f=f, f_prime=fp, F=F, odd=False, growth_p=4.0,
                             name="asym-cubic")


@pytest.fixture(scope="session")
def spec50_const(cubic):
    return ProblemSpec(50.0, cubic, constant_diffusion(1.0))


@pytest.fixture(scope="session")
def spec50_affine(cubic):
    return ProblemSpec(50.0, cubic, affine_diffusion(1.0, 1.0))


@pytest.fixture(scope="session")
def spec20_affine(cubic):
    return ProblemSpec(20.0, cubic, affine_diffusion(1.0, 1.0))
