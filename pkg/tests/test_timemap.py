import numpy as np
import pytest

from nlchafee import timemap as tm
from nlchafee.errors import (
    AboveSeparatrixError,
    NoEquilibriumError,
    SingularTimeMapError,
)

PI2 = np.pi * np.pi


# ---------------------------------------------------------------------------
# independent oracles


def tau_brute(nl, E, lam_t, n):
    """Raw trapezoid of the singular integral; error O(sqrt(1/n))."""
    U = tm.positive_inverse(nl, E)
    u = np.linspace(0.0, U, n + 1)[:-1]    # drop the singular endpoint
    vals = (E - nl.F(u)) ** -0.5
    return np.trapezoid(vals, u) / np.sqrt(lam_t)


def solve_energy_brute(nl, k, lam_t, n_scan=2000, n_fine=200_000):
    """Sign-change scan on an E-grid plus bisection, all on tau_brute."""
    target = 1.0 / (np.sqrt(2.0) * k)
    Es = np.linspace(1e-6, 0.2499, n_scan)
    vals = np.array([tau_brute(nl, E, lam_t, 4000) for E in Es]) - target
    i = int(np.flatnonzero(np.sign(vals[:-1]) != np.sign(vals[1:]))[0])
    lo, hi = Es[i], Es[i + 1]
    for _ in range(50):
        mid = 0.5 * (lo + hi)
        if tau_brute(nl, mid, lam_t, n_fine) > target:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


# frozen from solve_energy_brute(cubic, 1, 2 pi^2) with the 10^6-point
# trapezoid; the oracle's endpoint error is O(1/sqrt(n)) which bounds the
# admissible gap to the quadrature solver
BRUTE_E1_2PI2 = 0.22114723861930968
SOLVER_E1_2PI2 = 0.21782458259019993


# ---------------------------------------------------------------------------
# inverses


def test_positive_inverse_trivial(cubic):
    assert tm.positive_inverse(cubic, 0.0) == 0.0
    assert tm.positive_inverse(cubic, 0.25) == pytest.approx(1.0, abs=1e-12)


def test_positive_inverse_derived(cubic):
    # analytic quartic inversion u^2 = 1 - sqrt(1 - 4E)
    U = tm.positive_inverse(cubic, 0.16)
    assert U == pytest.approx(0.6324555320336759, abs=1e-14)
    assert abs(cubic.F(U) - 0.16) <= 1e-13


def test_positive_inverse_generic_path(asym_nl):
    # asym_nl carries no analytic inverse: brentq path
    for E in (1e-10, 0.01, 0.2, 0.2499):
        U = tm.positive_inverse(asym_nl, E)
        assert abs(asym_nl.F(U) - E) <= 1e-13
    Un = tm.negative_inverse(asym_nl, 0.05)
    assert Un < 0 and abs(asym_nl.F(Un) - 0.05) <= 1e-13


def test_positive_inverse_above_separatrix(cubic):
    with pytest.raises(AboveSeparatrixError):
        tm.positive_inverse(cubic, 0.25 + 1e-6)


def test_sup_F(cubic, asym_nl, linear_nl):
    assert tm.sup_F(cubic, 1) == pytest.approx(0.25, abs=1e-13)
    assert tm.sup_F(cubic, -1) == pytest.approx(0.25, abs=1e-13)
    assert tm.sup_F(asym_nl, -1) == pytest.approx(1.0 / 8.0, abs=1e-12)
    assert tm.sup_F(linear_nl) == np.inf


# ---------------------------------------------------------------------------
# time map


def test_time_map_linear_is_constant(linear_nl):
    # quadratic F: tau = pi / sqrt(2 lam) for every E
    for E in (1e-6, 0.1, 3.0, 50.0):
        assert tm.time_map(linear_nl, 2.0, E) == pytest.approx(np.pi / 2, rel=1e-9)


def test_time_map_small_energy_limit(cubic):
    # at lam_t = 2 the limit is pi/2 itself
    assert tm.time_map(cubic, 2.0, 1e-8) == pytest.approx(np.pi / 2, rel=1e-3)
    for lt in (15.0, 40.0, 90.0):
        tau = tm.time_map(cubic, lt, 1e-8)
        assert abs(tau * np.sqrt(2 * lt) / np.pi - 1.0) < 1e-3


def test_time_map_sides_equal_for_odd(cubic):
    for E in (0.01, 0.1, 0.2):
        assert tm.time_map(cubic, 30.0, E, "plus") == tm.time_map(cubic, 30.0, E, "minus")


def test_time_map_decreasing_in_lambda(cubic):
    taus = [tm.time_map(cubic, lt, 0.1) for lt in (10.0, 20.0, 40.0, 80.0)]
    assert all(b < a for a, b in zip(taus, taus[1:]))


def test_time_map_increasing_in_E(cubic):
    # concave f: the arch takes longer the closer the orbit is to the separatrix
    taus = [tm.time_map(cubic, 30.0, E) for E in (0.01, 0.05, 0.1, 0.2, 0.24)]
    assert all(b > a for a, b in zip(taus, taus[1:]))


def test_time_map_singular_guard(cubic):
    with pytest.raises(SingularTimeMapError):
        tm.time_map(cubic, 30.0, 0.25 - 1e-13)


# ---------------------------------------------------------------------------
# energy-level roots


def test_no_equilibrium_at_threshold(cubic):
    with pytest.raises(NoEquilibriumError):
        tm.solve_energy_level(cubic, 1, PI2)
    with pytest.raises(NoEquilibriumError):
        tm.solve_energy_level(cubic, 2, 4 * PI2 - 1e-9)


def test_energy_level_against_brute_oracle(cubic):
    lvl = tm.solve_energy_level(cubic, 1, 2 * PI2)
    assert lvl.E == pytest.approx(SOLVER_E1_2PI2, abs=1e-9)   # regression pin
    assert abs(lvl.E - BRUTE_E1_2PI2) < 5e-3                  # oracle window
    # live reduced-size oracle run, looser tolerance
    live = solve_energy_brute(cubic, 1, 2 * PI2, n_scan=400, n_fine=20_000)
    assert abs(lvl.E - live) < 2.5e-2


def test_energy_level_monotone_in_lambda(cubic):
    E1 = tm.solve_energy_level(cubic, 1, 2 * PI2).E
    E2 = tm.solve_energy_level(cubic, 1, 3 * PI2).E
    assert E1 < E2


def test_energy_level_large_lambda_clamps_to_separatrix(cubic):
    lvl = tm.solve_energy_level(cubic, 1, 1e4)
    assert 0.25 - lvl.E < 0.01
    assert lvl.clamped


# ---------------------------------------------------------------------------
# profiles


@pytest.mark.parametrize("k", [1, 2, 3])
def test_profile_invariants(cubic, k):
    lam_t = 120.0
    grid_points = 1 + 2 * k * 512          # arch midpoints land on the grid
    p = tm.reconstruct_profile(cubic, k, lam_t, 1, grid_points)
    x, u = p.samples[:, 0], p.samples[:, 1]
    assert abs(u[0]) <= 1e-8 and abs(u[-1]) <= 1e-8
    for j in range(k + 1):
        i = int(round(j / k * (grid_points - 1)))
        assert abs(u[i]) <= 1e-6            # zeros at x = j/k for odd f
    assert abs(np.max(np.abs(u)) - p.u_max) <= 1e-8
    # trapezoid of (u')^2 via the orbit relation against the closed-form d
    up2 = 2.0 * lam_t * np.maximum(p.E - cubic.F(u), 0.0)
    d_trap = np.trapezoid(up2, x)
    assert abs(d_trap - p.d) / p.d <= 1e-6
    assert p.v0 == pytest.approx(np.sqrt(2 * lam_t * p.E), abs=1e-12)


def test_profile_k1_single_arch(cubic):
    p = tm.reconstruct_profile(cubic, 1, 2 * PI2, 1, 1025)
    u = p.samples[:, 1]
    assert np.all(u[1:-1] > 0)
    assert u[512] == pytest.approx(p.u_max, abs=1e-12)


def test_profile_k2_arch_signs(cubic):
    p = tm.reconstruct_profile(cubic, 2, 120.0, 1, 2049)
    u = p.samples[:, 1]
    assert np.all(u[1:1024] > 0)
    assert np.all(u[1025:-1] < 0)


def test_profile_reflection_and_negation(cubic):
    plus = tm.reconstruct_profile(cubic, 2, 120.0, 1, 1025)
    minus = tm.reconstruct_profile(cubic, 2, 120.0, -1, 1025)
    assert np.max(np.abs(minus.samples[:, 1] - plus.samples[::-1, 1])) <= 1e-10
    assert np.max(np.abs(minus.samples[:, 1] + plus.samples[:, 1])) <= 1e-10
    assert minus.d == pytest.approx(plus.d, rel=1e-14)


def test_profile_h1_norm_matches_grid_oracle(cubic):
    # oracle: profile at 2^15 + 1 points, trapezoid of (u')^2
    lam_t = 2 * PI2
    g = tm.profile_h1_norm_sq(cubic, 1, lam_t)
    p = tm.reconstruct_profile(cubic, 1, lam_t, 1, 2**15 + 1)
    up2 = 2.0 * lam_t * np.maximum(p.E - cubic.F(p.samples[:, 1]), 0.0)
    oracle = np.trapezoid(up2, p.samples[:, 0])
    assert abs(g - oracle) / oracle <= 1e-6


def test_norm_increases_with_lambda(cubic):
    lts = np.linspace(1.2 * PI2, 300.0, 12)
    gs = [tm.profile_h1_norm_sq(cubic, 1, lt) for lt in lts]
    assert all(b > a for a, b in zip(gs, gs[1:]))


def test_norm_vanishes_at_threshold(cubic):
    assert tm.profile_h1_norm_sq(cubic, 1, PI2 * (1 + 1e-10)) < 1e-6
    assert tm.profile_h1_norm_sq(cubic, 3, 9 * PI2 * (1 + 1e-10)) < 1e-6


def test_subinterval_rescaling_identity(cubic):
    # u_k at lam_t restricted to [0, 1/k] equals u_1 at lam_t/k^2 stretched by k
    k, lam_t = 3, 9 * 2 * PI2
    pk = tm.reconstruct_profile(cubic, k, lam_t, 1, 1 + k * 512)
    p1 = tm.reconstruct_profile(cubic, 1, lam_t / k**2, 1, 513)
    seg = pk.samples[:513, 1]               # x in [0, 1/k]
    assert np.max(np.abs(seg - p1.samples[:, 1])) <= 1e-8


def test_nonlinearity_rescaling_identity(cubic):
    # with f_k(u) = sqrt(k) f(u / sqrt(k)), the positive profile scales by sqrt(k)
    from nlchafee.model import make_nonlinearity
    k = 2.0
    rk = np.sqrt(k)
    fk = make_nonlinearity(
        f=lambda u: rk * cubic.f(np.asarray(u) / rk),
        f_prime=lambda u: cubic.f_prime(np.asarray(u) / rk),
        F=lambda u: k * cubic.F(np.asarray(u) / rk),
        odd=True, growth_p=4.0, name="cubic-rescaled")
    lam_t = 3 * PI2
    p_base = tm.reconstruct_profile(cubic, 1, lam_t, 1, 513)
    p_resc = tm.reconstruct_profile(fk, 1, lam_t, 1, 513)
    assert np.max(np.abs(p_resc.samples[:, 1] - rk * p_base.samples[:, 1])) <= 1e-8


def test_non_odd_roots_and_profiles(asym_nl):
    lam_t = 60.0
    lvl_plus = tm.solve_energy_level(asym_nl, 1, lam_t, sign=1)
    lvl_minus = tm.solve_energy_level(asym_nl, 1, lam_t, sign=-1)
    assert lvl_plus.E != pytest.approx(lvl_minus.E, rel=1e-6)
    for sgn, lvl in ((1, lvl_plus), (-1, lvl_minus)):
        p = tm.reconstruct_profile(asym_nl, 1, lam_t, sgn, 2049)
        assert abs(p.samples[-1, 1]) <= 1e-8
        assert sgn * p.samples[1024, 1] > 0
    # k = 2 uses one arch per side; boundary closes
    p2 = tm.reconstruct_profile(asym_nl, 2, lam_t, 1, 2049)
    assert abs(p2.samples[-1, 1]) <= 1e-8
