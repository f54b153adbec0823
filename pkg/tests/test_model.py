import numpy as np
import pytest
from scipy.integrate import quad

from nlchafee.model import (
    ProblemSpec,
    affine_diffusion,
    builtin_cubic,
    constant_diffusion,
    make_nonlinearity,
    table_diffusion,
    validate_assumptions,
)
from nlchafee.errors import ConfigError


def test_cubic_point_values(cubic):
    assert cubic.f(0.0) == 0.0
    assert cubic.f(1.0) == 0.0
    assert cubic.F(1.0) == pytest.approx(0.25, abs=0)
    assert cubic.f(2.0) == -6.0
    assert cubic.F(2.0) == -2.0
    assert cubic.f_prime(0.0) == 1.0


def test_cubic_F_is_even(cubic):
    u = np.arange(1e-6, 3.0, 1e-3)
    assert np.max(np.abs(cubic.F(-u) - cubic.F(u))) <= 1e-14


def test_cubic_odd_exact(cubic):
    u = np.arange(1e-6, 3.0, 1e-3)
    assert np.all(cubic.f(-u) == -cubic.f(u))


def test_cubic_sup_F_on_grid(cubic):
    u = np.linspace(0.0, 3.0, 300001)
    vals = cubic.F(u)
    i = np.argmax(vals)
    assert abs(vals[i] - 0.25) <= 1e-9
    assert abs(u[i] - 1.0) <= 1e-5


def test_F_matches_quadrature_of_f(cubic):
    for u in np.linspace(-3.0, 3.0, 25):
        ref, _ = quad(cubic.f, 0.0, u, epsabs=1e-14, epsrel=1e-13)
        scale = max(abs(ref), 1e-3)
        assert abs(cubic.F(u) - ref) / scale <= 1e-10


def test_quadrature_antiderivative_fallback(cubic):
    nl = make_nonlinearity(f=cubic.f, f_prime=cubic.f_prime, odd=True,
                           growth_p=4.0, name="cubic-quad")
    for u in (-2.0, -0.5, 0.0, 0.3, 1.7):
        assert nl.F(u) == pytest.approx(cubic.F(u), abs=1e-12)


def test_validate_assumptions_cubic_all_pass(cubic):
    spec = ProblemSpec(50.0, cubic, constant_diffusion(1.0))
    report = validate_assumptions(spec)
    assert report.passed
    ids = {c.id for c in report}
    assert {"A2", "A3", "A4", "A5", "A6"} <= ids


def test_validate_assumptions_linear_fails(linear_nl):
    spec = ProblemSpec(10.0, linear_nl, constant_diffusion(1.0))
    report = validate_assumptions(spec)
    failed = report.failed_ids()
    assert "A4" in failed
    by_id = {c.id: c for c in report}
    # p = 2 dissipativity can only be falsified by sampling; the report says so
    assert by_id["A5"].advisory or not by_id["A5"].passed
    assert not by_id["A5"].passed


def test_validate_assumptions_affine_diffusion(cubic):
    spec = ProblemSpec(4 * np.pi**2, cubic, affine_diffusion(1.0, 1.0))
    by_id = {c.id: c for c in validate_assumptions(spec)}
    assert by_id["A6"].passed
    assert by_id["A8"].passed


def test_diffusion_antiderivative_bounds(cubic):
    diff = affine_diffusion(1.0, 1.0)
    assert diff.A(0.0) == 0.0
    s = np.arange(0.0, 100.0, 0.1)
    a_vals = diff.a(s)
    for s1, s2 in ((0.0, 1.0), (2.5, 7.0), (10.0, 99.0)):
        inc = diff.A(s2) - diff.A(s1)
        assert diff.lower_bound_m * (s2 - s1) <= inc <= a_vals.max() * (s2 - s1) + 1e-12


def test_table_diffusion_interpolation():
    s = np.linspace(0.0, 10.0, 21)
    diff = table_diffusion(s, 1.0 + 0.5 * s)
    assert diff.a(4.0) == pytest.approx(3.0, abs=1e-9)
    assert diff.a(50.0) == pytest.approx(6.0)          # held at the last value
    assert diff.A(0.0) == 0.0
    assert diff.nondecreasing
    assert diff.a_prime(2.0) == pytest.approx(0.5, abs=1e-9)


def test_table_diffusion_rejects_bad_input():
    with pytest.raises(ConfigError):
        table_diffusion([0.0, 1.0], [1.0, -2.0])
    with pytest.raises(ConfigError):
        table_diffusion([1.0, 2.0], [1.0, 1.0])        # must start at s = 0
    with pytest.raises(ConfigError):
        table_diffusion([0.0, 0.0, 1.0], [1.0, 1.0, 1.0])


def test_problem_spec_validation(cubic):
    with pytest.raises(ConfigError):
        ProblemSpec(-1.0, cubic, constant_diffusion(1.0))
    spec = ProblemSpec(10.0, cubic, constant_diffusion(1.0), h=0.5)
    with pytest.raises(ConfigError):
        spec.require_autonomous_homogeneous("test-op")
