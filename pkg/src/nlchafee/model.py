"""Problem definition: nonlinearity, nonlocal diffusion coefficient, parameters.

The evolution problem is

    u_t - a(||u||^2_{H^1_0}) u_xx = lambda f(u) + h    on (0, 1), Dirichlet BC.

Evaluator bundles are immutable and pure; they are safe to share across
concurrent workers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate as _sint
from scipy.interpolate import PchipInterpolator

from .errors import ConfigError

__all__ = [
    "Nonlinearity",
    "DiffusionCoefficient",
    "ProblemSpec",
    "AssumptionCheck",
    "ValidationReport",
    "builtin_cubic",
    "make_nonlinearity",
    "constant_diffusion",
    "affine_diffusion",
    "table_diffusion",
    "validate_assumptions",
]


@dataclass(frozen=True, eq=False)
class Nonlinearity:
    """Reaction term bundle: f, its derivative, and the antiderivative F.

    F must satisfy F(0) = 0.  ``f_inverse_pos``/``f_inverse_neg`` optionally
    give the positive/negative inverse of F in closed form; when absent a
    vectorized bisection is used by the time-map code.
    """

    f: Callable
    f_prime: Callable
    F: Callable
    odd: bool
    growth_p: float
    name: str
    F_inverse_pos: Optional[Callable] = None
    F_inverse_neg: Optional[Callable] = None


@dataclass(frozen=True, eq=False)
class DiffusionCoefficient:
    """Nonlocal viscosity bundle: a, its antiderivative A(s) = int_0^s a.

    ``lower_bound_m`` is the positive constant m with a(s) >= m.
    ``a_prime`` is optional; a central difference (step 1e-6) is used when
    linearizing if it is missing.
    """

    a: Callable
    A: Callable
    a_prime: Optional[Callable]
    lower_bound_m: float
    nondecreasing: bool
    name: str


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """Full problem: lambda, reaction, diffusion, constant forcing h."""

    lam: float
    nonlinearity: Nonlinearity
    diffusion: DiffusionCoefficient
    h: float = 0.0
    grid_points: int = 1025

    def __post_init__(self):
        if self.lam <= 0:
            raise ConfigError("lambda must be positive")
        if self.grid_points < 3:
            raise ConfigError("grid_points must be >= 3")

    def require_autonomous_homogeneous(self, what: str) -> None:
        """Attractor-structure operations assume h = 0."""
        if self.h != 0.0:
            raise ConfigError(f"{what} requires h = 0 (got h={self.h})")


# ---------------------------------------------------------------------------
# builtin nonlinearities


def _cubic_f(u):
    # u*u*u rather than u**3: multiplication rounds sign-symmetrically, so
    # f(-u) == -f(u) holds exactly in floating point
    u = np.asarray(u, dtype=float)
    return u - u * u * u


def _cubic_fp(u):
    u = np.asarray(u, dtype=float)
    return 1.0 - 3.0 * u * u


def _cubic_F(u):
    u = np.asarray(u, dtype=float)
    u2 = u * u
    return u2 * (0.5 - 0.25 * u2)


def _cubic_Finv_pos(y):
    # smallest u >= 0 with u^2/2 - u^4/4 = y; written to avoid the
    # cancellation in 1 - sqrt(1 - 4y) for tiny y
    y = np.asarray(y, dtype=float)
    s = np.sqrt(np.maximum(0.0, 1.0 - 4.0 * y))
    return np.sqrt(4.0 * y / (1.0 + s))


def _cubic_Finv_neg(y):
    return -_cubic_Finv_pos(y)


def builtin_cubic() -> Nonlinearity:
    """Canonical odd instance f(u) = u - u^3, F(u) = u^2/2 - u^4/4 (p = 4)."""
    return Nonlinearity(
        f=_cubic_f,
        f_prime=_cubic_fp,
        F=_cubic_F,
        odd=True,
        growth_p=4.0,
        name="cubic",
        F_inverse_pos=_cubic_Finv_pos,
        F_inverse_neg=_cubic_Finv_neg,
    )


def make_nonlinearity(
    f: Callable,
    f_prime: Callable,
    F: Optional[Callable] = None,
    *,
    odd: bool = False,
    growth_p: float = 4.0,
    name: str = "custom",
    F_inverse_pos: Optional[Callable] = None,
    F_inverse_neg: Optional[Callable] = None,
) -> Nonlinearity:
    """Build a user nonlinearity.

    When F is omitted it is composed from adaptive quadrature of f with a
    cache; analytic F is preferred because F enters singular integrands.
    """
    if F is None:
        F = _quadrature_antiderivative(f)
    return Nonlinearity(
        f=f,
        f_prime=f_prime,
        F=F,
        odd=odd,
        growth_p=growth_p,
        name=name,
        F_inverse_pos=F_inverse_pos,
        F_inverse_neg=F_inverse_neg,
    )


def _quadrature_antiderivative(f: Callable) -> Callable:
    cache: dict = {}

    def F(u):
        if np.ndim(u) > 0:
            return np.array([F(float(v)) for v in np.ravel(u)]).reshape(np.shape(u))
        u = float(u)
        val = cache.get(u)
        if val is None:
            val, _ = _sint.quad(f, 0.0, u, limit=200, epsabs=1e-14, epsrel=1e-12)
            cache[u] = val
        return val

    return F


# ---------------------------------------------------------------------------
# builtin diffusion coefficients


def constant_diffusion(value: float = 1.0) -> DiffusionCoefficient:
    if value <= 0:
        raise ConfigError("constant diffusion requires a positive value")

    def a(s):
        return np.full_like(np.asarray(s, dtype=float), value) if np.ndim(s) else value

    def A(s):
        return value * np.asarray(s, dtype=float)

    def ap(s):
        return np.zeros_like(np.asarray(s, dtype=float)) if np.ndim(s) else 0.0

    return DiffusionCoefficient(a, A, ap, value, True, f"constant({value:g})")


def affine_diffusion(a0: float = 1.0, slope: float = 1.0) -> DiffusionCoefficient:
    if a0 <= 0 or slope < 0:
        raise ConfigError("affine diffusion requires a0 > 0 and slope >= 0")

    def a(s):
        return a0 + slope * np.asarray(s, dtype=float)

    def A(s):
        s = np.asarray(s, dtype=float)
        return a0 * s + 0.5 * slope * s * s

    def ap(s):
        return np.full_like(np.asarray(s, dtype=float), slope) if np.ndim(s) else slope

    return DiffusionCoefficient(a, A, ap, a0, slope >= 0, f"affine({a0:g}+{slope:g}s)")


def table_diffusion(s_values: Sequence[float], a_values: Sequence[float],
                    name: str = "table") -> DiffusionCoefficient:
    """Tabulated a(.) evaluated by monotone cubic (PCHIP) interpolation.

    Values beyond the last node are held constant at the endpoint value.
    """
    s = np.asarray(s_values, dtype=float)
    av = np.asarray(a_values, dtype=float)
    if s.ndim != 1 or s.size < 2 or s.shape != av.shape:
        raise ConfigError("table diffusion needs two equal-length columns")
    if not np.all(np.diff(s) > 0):
        raise ConfigError("table diffusion requires strictly increasing s column")
    if s[0] != 0.0:
        raise ConfigError("table diffusion must start at s = 0")
    if np.any(av <= 0):
        raise ConfigError("table diffusion values must be positive")

    pchip = PchipInterpolator(s, av, extrapolate=False)
    dpchip = pchip.derivative()
    anti = pchip.antiderivative()
    s_hi, a_hi, A_hi = float(s[-1]), float(av[-1]), float(anti(s[-1]))

    def a(x):
        x = np.asarray(x, dtype=float)
        out = np.where(x >= s_hi, a_hi, pchip(np.minimum(x, s_hi)))
        return float(out) if out.ndim == 0 else out

    def A(x):
        x = np.asarray(x, dtype=float)
        out = np.where(x >= s_hi, A_hi + a_hi * (x - s_hi), anti(np.minimum(x, s_hi)))
        return float(out) if out.ndim == 0 else out

    def ap(x):
        x = np.asarray(x, dtype=float)
        out = np.where(x >= s_hi, 0.0, dpchip(np.minimum(x, s_hi)))
        return float(out) if out.ndim == 0 else out

    nondec = bool(np.all(np.diff(av) >= 0))
    return DiffusionCoefficient(a, A, ap, float(av.min()), nondec, name)


# ---------------------------------------------------------------------------
# assumption validation by sampling


@dataclass(frozen=True)
class AssumptionCheck:
    id: str
    passed: bool
    detail: str = ""
    advisory: bool = False


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks if not c.advisory)

    def failed_ids(self):
        return [c.id for c in self.checks if not c.passed and not c.advisory]

    def __iter__(self):
        return iter(self.checks)


# documented sampling grids (see module docs): u in [-3, 3] step 1e-3,
# s in [0, 100] step 0.1
_U_GRID = np.arange(-3.0, 3.0 + 1e-9, 1e-3)
_S_GRID = np.arange(0.0, 100.0 + 1e-9, 0.1)


def _eval(fn, x):
    try:
        out = np.asarray(fn(x), dtype=float)
        if out.shape != np.shape(x):
            raise TypeError
        return out
    except Exception:
        return np.array([float(fn(float(v))) for v in x])


def validate_assumptions(spec: ProblemSpec) -> ValidationReport:
    """Sample-based check of the standing assumptions; reports, never aborts."""
    nl, dc = spec.nonlinearity, spec.diffusion
    checks = []

    f0 = float(nl.f(0.0))
    checks.append(AssumptionCheck("A2", f0 == 0.0, f"f(0) = {f0!r}"))

    fp0 = float(nl.f_prime(0.0))
    checks.append(AssumptionCheck("A3", abs(fp0 - 1.0) <= 1e-12, f"f'(0) = {fp0!r}"))

    # A4: strict concavity for u > 0, convexity for u < 0, by second differences
    up = _U_GRID[_U_GRID >= 1e-6]
    fu = _eval(nl.f, up)
    d2p = fu[2:] - 2.0 * fu[1:-1] + fu[:-2]
    un = _U_GRID[_U_GRID <= -1e-6]
    fn_ = _eval(nl.f, un)
    d2n = fn_[2:] - 2.0 * fn_[1:-1] + fn_[:-2]
    ok4 = bool(np.all(d2p < 0.0) and np.all(d2n > 0.0))
    checks.append(AssumptionCheck("A4", ok4, "sampled second differences on [-3,3]"))

    # A5: dissipativity sign at large |u|
    u_big = np.array([-3.0, -2.5, 2.5, 3.0])
    fuu = _eval(nl.f, u_big) * u_big
    if nl.growth_p > 2.0:
        ok5 = bool(np.all(fuu < 0.0))
        checks.append(AssumptionCheck("A5", ok5, f"f(u)u at |u|=2.5,3: {fuu.round(3).tolist()}"))
    else:
        # p = 2 needs limsup f(u)/u <= 0, which sampling can only falsify
        ok5 = bool(np.all(fuu <= 1e-12 * u_big * u_big))
        checks.append(AssumptionCheck("A5", ok5, "p = 2 limit condition checked on a finite grid only",
                                      advisory=True))

    if nl.odd:
        neg = _eval(nl.f, -up)
        ok_odd = bool(np.all(neg == -fu))
        checks.append(AssumptionCheck("odd", ok_odd, "f(-u) = -f(u) exactly on sampled grid"))

    a_s = _eval(dc.a, _S_GRID)
    ok6 = bool(np.all(a_s >= dc.lower_bound_m - 1e-12)) and dc.lower_bound_m > 0
    checks.append(AssumptionCheck("A6", ok6, f"min sampled a = {a_s.min():.6g}, m = {dc.lower_bound_m:g}"))

    if dc.nondecreasing:
        ok8 = bool(np.all(np.diff(a_s) >= -1e-12))
        checks.append(AssumptionCheck("A8", ok8, "a nondecreasing on sampled s grid"))
    else:
        checks.append(AssumptionCheck("A8", True, "not claimed (nondecreasing=False)", advisory=True))

    return ValidationReport(tuple(checks))
