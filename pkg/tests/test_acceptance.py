"""Acceptance gate: one test per criterion, at the stated tolerances.

Run with ``pytest tests/test_acceptance.py -v -s`` to see one pass/fail line
per criterion with the measured values and wall time.  Criteria 7 and 8 share
a single 50-trajectory run (cached inside the verify module).  The stated
runtime budgets are checked with a 5x allowance for slow machines; the
numeric tolerances are exact.
"""

import pytest

from nlchafee.config import RunConfig
from nlchafee import verify as v


BUDGET_SECONDS = {
    "equilibrium_cascade": 10.0,
    "nonlocal_uniqueness": 10.0,
    "small_energy_time_map": 1.0,
    "oracle_equivalence": 5.0,
    "norm_monotonic": 5.0,
    "fig2_multiplicity": 10.0,
    "lyapunov_monotone": 120.0,
    "lap_monotone": 120.0,       # same run as lyapunov_monotone
    "zero_instability": 5.0,
    "u1_stability": 60.0,
    "connection_graph": 180.0,
    "energy_residual_halving": 60.0,
}


@pytest.fixture(scope="module")
def cfg():
    return RunConfig()


def _check(result):
    budget = BUDGET_SECONDS[result.criterion_id]
    line = (f"[{result.status.upper():4s}] {result.criterion_id}: "
            f"measured={result.measured} tol={result.tolerance} "
            f"({result.seconds:.1f}s / budget {budget:.0f}s)")
    print(line)
    assert result.passed, line
    assert result.seconds < 5.0 * budget, f"runtime blowout: {line}"


def test_criterion_01_equilibrium_cascade(cfg):
    _check(v._c01_equilibrium_cascade(cfg))


def test_criterion_02_nonlocal_uniqueness(cfg):
    _check(v._c02_nonlocal_uniqueness(cfg))


def test_criterion_03_small_energy_time_map(cfg):
    _check(v._c03_small_energy_time_map(cfg))


def test_criterion_04_oracle_equivalence(cfg):
    _check(v._c04_oracle_equivalence(cfg))


def test_criterion_05_norm_monotonic(cfg):
    _check(v._c05_norm_monotonic(cfg))


def test_criterion_06_fig2_multiplicity(cfg):
    _check(v._c06_fig2_multiplicity(cfg))


def test_criterion_07_lyapunov_monotone(cfg):
    _check(v._c07_lyapunov_monotone(cfg))


def test_criterion_08_lap_monotone(cfg):
    _check(v._c08_lap_monotone(cfg))


def test_criterion_09_zero_instability(cfg):
    _check(v._c09_zero_instability(cfg))


def test_criterion_10_u1_stability(cfg):
    _check(v._c10_u1_stability(cfg))


def test_criterion_11_connection_graph(cfg):
    _check(v._c11_connection_graph(cfg))


def test_criterion_12_energy_residual_halving(cfg):
    _check(v._c12_energy_residual_halving(cfg))
