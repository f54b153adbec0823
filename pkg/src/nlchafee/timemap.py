"""Frozen-coefficient equilibria via time maps.

The stationary profiles of u'' + lam_t f(u) = 0 with u(0) = u(1) = 0 are
organised by the orbit relation

    (u'(x))^2 / 2 + lam_t F(u(x)) = lam_t E.

The quarter-arc length at energy E is the singular integral

    tau_side(E) = lam_t^{-1/2} * int (E - F(u))^{-1/2} du        (over the arc)

which we compute after the substitution F(u) = E sin^2(theta); the
transformed integrand 2 sqrt(E) sin(theta) / |f(u(theta))| is smooth up to
the separatrix.  Profiles with k sign-definite arches correspond to roots of
arch-count combinations of tau_+/tau_- equal to 1/sqrt(2).
"""

from __future__ import annotations

import warnings
import weakref
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq
from scipy.special import roots_legendre

from .errors import (
    AboveSeparatrixError,
    NoEquilibriumError,
    SingularTimeMapError,
)
from .model import Nonlinearity

__all__ = [
    "EnergyLevel",
    "EquilibriumProfile",
    "sup_F",
    "first_zero_of_f",
    "positive_inverse",
    "negative_inverse",
    "time_map",
    "solve_energy_level",
    "reconstruct_profile",
    "profile_h1_norm_sq",
]

_SQRT2 = float(np.sqrt(2.0))
_SINGULAR_MARGIN = 1e-12
_E_BISECT_TOL = 1e-13
_TAU_REL_TOL = 1e-10
_TAU_MAX_ORDER = 4096


@dataclass(frozen=True)
class EnergyLevel:
    """Orbit energy of the k-arch profile at rescaled parameter lam_t."""

    E: float
    k: int
    lambda_tilde: float
    sign: int = 1
    clamped: bool = False


@dataclass(frozen=True)
class EquilibriumProfile:
    """One stationary profile of the frozen-coefficient problem.

    ``samples`` is an (n, 2) array of (x, u(x)) on a uniform grid; ``d`` is
    the squared H^1_0 norm from the closed-form arc integral, not from grid
    quadrature.
    """

    k: int
    sign: int
    lambda_tilde: float
    E: float
    d: float
    v0: float
    u_max: float
    samples: np.ndarray
    clamped: bool = False


# ---------------------------------------------------------------------------
# quadrature nodes


@lru_cache(maxsize=None)
def _gl_raw(order: int):
    t, w = roots_legendre(order)
    return t, w


@lru_cache(maxsize=None)
def _gl_quarter(order: int):
    # nodes mapped to (0, pi/2)
    t, w = _gl_raw(order)
    return (t + 1.0) * (np.pi / 4.0), w * (np.pi / 4.0)


# ---------------------------------------------------------------------------
# separatrix data per nonlinearity, per side

_side_cache: "weakref.WeakKeyDictionary" = weakref.WeakKeyDictionary()


def first_zero_of_f(nl: Nonlinearity, side: int = 1) -> float:
    """First zero of f beyond 0 on the requested side (inf if none)."""
    return _side_data(nl, side)[0]


def sup_F(nl: Nonlinearity, side: int = 1) -> float:
    """sup of F over the monotone branch on the requested side."""
    return _side_data(nl, side)[1]


def _side_data(nl: Nonlinearity, side: int):
    per_nl = _side_cache.setdefault(nl, {})
    if side not in per_nl:
        per_nl[side] = _compute_side(nl, side)
    return per_nl[side]


def _compute_side(nl: Nonlinearity, side: int):
    s = 1.0 if side > 0 else -1.0
    u = 1e-3
    prev = u
    zero = None
    while u <= 1e9:
        if s * float(nl.f(s * u)) <= 0.0 and u > 1e-3:
            zero = brentq(lambda v: s * float(nl.f(s * v)), prev, u,
                          xtol=1e-15, rtol=8.9e-16)
            break
        prev = u
        u *= 2.0
    if zero is None:
        return np.inf, np.inf, np.inf
    # golden-section maximum of F on [0, zero]; F is increasing there so the
    # search drifts to the right endpoint, where F is flat (f = 0)
    lo, hi = 0.0, zero
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    c = hi - invphi * (hi - lo)
    d = lo + invphi * (hi - lo)
    fc = float(nl.F(s * c))
    fd = float(nl.F(s * d))
    for _ in range(80):
        if fc < fd:
            lo, c, fc = c, d, fd
            d = lo + invphi * (hi - lo)
            fd = float(nl.F(s * d))
        else:
            hi, d, fd = d, c, fc
            c = hi - invphi * (hi - lo)
            fc = float(nl.F(s * c))
        if hi - lo < 1e-14 * max(1.0, zero):
            break
    u_at = 0.5 * (lo + hi)
    sup = max(float(nl.F(s * u_at)), float(nl.F(s * zero)))
    return zero, sup, u_at


# ---------------------------------------------------------------------------
# inverses of F


def positive_inverse(nl: Nonlinearity, E: float) -> float:
    """Smallest u >= 0 with F(u) = E."""
    return _scalar_inverse(nl, E, 1)


def negative_inverse(nl: Nonlinearity, E: float) -> float:
    """Largest u <= 0 with F(u) = E (negative inverse)."""
    return _scalar_inverse(nl, E, -1)


def _scalar_inverse(nl: Nonlinearity, E: float, side: int) -> float:
    if E < 0:
        raise ValueError("E must be nonnegative")
    zero, sup, u_at = _side_data(nl, side)
    if np.isfinite(sup) and E > sup + 1e-13:
        raise AboveSeparatrixError(
            f"E={E!r} exceeds sup F = {sup!r} on side {side:+d}")
    if E == 0.0:
        return 0.0
    analytic = nl.F_inverse_pos if side > 0 else nl.F_inverse_neg
    if analytic is not None:
        return float(analytic(min(E, sup) if np.isfinite(sup) else E))
    s = 1.0 if side > 0 else -1.0
    Ec = min(E, sup)
    if np.isfinite(sup) and Ec >= sup:
        return s * u_at

    def res(t):
        return float(nl.F(s * t)) - Ec

    hi = u_at if np.isfinite(sup) else _expand_bracket(nl, Ec, s)
    root = brentq(res, 0.0, hi, xtol=1e-15, rtol=8.9e-16)
    return s * root


def _expand_bracket(nl: Nonlinearity, E: float, s: float) -> float:
    t = 1.0
    while float(nl.F(s * t)) < E:
        t *= 2.0
        if t > 1e9:
            raise AboveSeparatrixError("could not bracket the inverse of F")
    return t


def _inverse_nodes(nl: Nonlinearity, y: np.ndarray, side: int) -> np.ndarray:
    """Vectorized inverse of F at the quadrature nodes (values >= 0)."""
    analytic = nl.F_inverse_pos if side > 0 else nl.F_inverse_neg
    if analytic is not None:
        return np.asarray(analytic(y), dtype=float)
    zero, sup, u_at = _side_data(nl, side)
    s = 1.0 if side > 0 else -1.0
    hi_scalar = u_at if np.isfinite(sup) else _expand_bracket(nl, float(np.max(y)), s)
    lo = np.zeros_like(y)
    hi = np.full_like(y, hi_scalar)
    for _ in range(90):
        mid = 0.5 * (lo + hi)
        below = np.asarray(nl.F(s * mid), dtype=float) < y
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return s * 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# time maps


def _tau_integral(nl: Nonlinearity, E: float, side: int,
                  tol: float = _TAU_REL_TOL, max_order: int = _TAU_MAX_ORDER) -> float:
    """int_0^{pi/2} 2 sqrt(E) sin(th) / |f(u(th))| dth with order doubling."""
    prev = None
    order = 16
    while True:
        th, w = _gl_quarter(order)
        u = _inverse_nodes(nl, E * np.sin(th) ** 2, side)
        val = 2.0 * np.sqrt(E) * float(np.sum(w * np.sin(th) / np.abs(nl.f(u))))
        if prev is not None and abs(val - prev) <= tol * abs(val):
            return val
        if order >= max_order:
            return val
        prev, order = val, order * 2


def time_map(nl: Nonlinearity, lambda_tilde: float, E: float,
             side: str = "plus", tol: float = _TAU_REL_TOL,
             max_order: int = _TAU_MAX_ORDER) -> float:
    """tau_side(E) = lam_t^{-1/2} * int over the arc of (E - F(u))^{-1/2} du."""
    if lambda_tilde <= 0:
        raise ValueError("lambda_tilde must be positive")
    if E <= 0:
        raise ValueError("E must be positive")
    sgn = 1 if side == "plus" else -1
    sup = _side_data(nl, sgn)[1]
    if np.isfinite(sup):
        if E > sup + 1e-13:
            raise AboveSeparatrixError(f"E={E!r} above sup F = {sup!r}")
        if sup - E < _SINGULAR_MARGIN:
            raise SingularTimeMapError(
                f"E within {_SINGULAR_MARGIN:g} of sup F; the integral diverges")
    return _tau_integral(nl, E, sgn, tol, max_order) / np.sqrt(lambda_tilde)


# ---------------------------------------------------------------------------
# energy-level root


def _arch_counts(k: int, sign: int):
    n_pos = (k + 1) // 2 if sign > 0 else k // 2
    return n_pos, k - n_pos


def solve_energy_level(nl: Nonlinearity, k: int, lambda_tilde: float,
                       sign: int = 1) -> EnergyLevel:
    """Root E of the arch-length equation n+ tau_+ + n- tau_- = 1/sqrt(2).

    The combination is strictly increasing in E (concavity of f), so a sign
    change on the bracket is refined by plain bisection.  When the root lies
    beyond the bracket ends (lambda_tilde exponentially large, or barely
    above the existence threshold) the nearest bracket end is returned with
    ``clamped=True``.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    thresh = k * k * np.pi * np.pi
    if lambda_tilde <= thresh:
        raise NoEquilibriumError(
            f"lambda_tilde={lambda_tilde:g} <= (k pi)^2 = {thresh:g}: "
            f"no profile with {k + 1} zeros")

    n_pos, n_neg = _arch_counts(k, sign)
    sups = []
    if n_pos:
        sups.append(_side_data(nl, 1)[1])
    if n_neg:
        sups.append(_side_data(nl, -1)[1])
    sup = min(sups)
    if not np.isfinite(sup):
        raise ValueError(
            "f has no zero beyond 0 (sup F infinite); closed orbits are "
            "unbounded and the arch-length equation has no root")

    inv_sqrt_lam = 1.0 / np.sqrt(lambda_tilde)

    def phi(E: float) -> float:
        val = 0.0
        if n_pos:
            val += n_pos * _tau_integral(nl, E, 1)
        if n_neg:
            val += n_neg * _tau_integral(nl, E, -1)
        return val * inv_sqrt_lam - 1.0 / _SQRT2

    lo = 1e-12 * sup
    hi = sup * (1.0 - 1e-9)
    if sup - hi < 2.0 * _SINGULAR_MARGIN:
        hi = sup - 2.0 * _SINGULAR_MARGIN

    if not nl.odd:
        _warn_on_extra_roots(phi, lo, hi)

    if phi(lo) >= 0.0:
        return EnergyLevel(lo, k, lambda_tilde, sign, clamped=True)
    if phi(hi) <= 0.0:
        return EnergyLevel(hi, k, lambda_tilde, sign, clamped=True)
    while hi - lo > _E_BISECT_TOL:
        mid = 0.5 * (lo + hi)
        if phi(mid) > 0.0:
            hi = mid
        else:
            lo = mid
    return EnergyLevel(0.5 * (lo + hi), k, lambda_tilde, sign)


def _warn_on_extra_roots(phi, lo, hi):
    # uniqueness per bracket is only proven for odd f; detect and report
    Es = np.linspace(lo, hi, 33)
    vals = np.array([phi(float(E)) for E in Es])
    changes = int(np.sum(np.sign(vals[:-1]) != np.sign(vals[1:])))
    if changes > 1:
        warnings.warn(
            f"arch-length equation shows {changes} sign changes for non-odd "
            "f; returning the first bisection root", stacklevel=3)


# ---------------------------------------------------------------------------
# profile reconstruction


class _ArcMap:
    """x <-> theta maps on one quarter arc, x(theta) by cumulative panels."""

    PANELS = 256
    GL_ORDER = 12

    def __init__(self, nl: Nonlinearity, E: float, lambda_tilde: float, side: int):
        self.nl = nl
        self.E = E
        self.lam = lambda_tilde
        self.side = side
        self._psi0 = 1.0 / np.sqrt(lambda_tilde)     # limit of psi at theta = 0
        b = np.linspace(0.0, np.pi / 2.0, self.PANELS + 1)
        tq, wq = _gl_raw(self.GL_ORDER)
        mid = 0.5 * (b[:-1] + b[1:])
        half = 0.5 * (b[1:] - b[:-1])
        nodes = mid[:, None] + half[:, None] * tq[None, :]
        vals = self._psi(nodes)
        panel = (vals * wq[None, :]).sum(axis=1) * half
        self.theta_b = b
        self.x_b = np.concatenate(([0.0], np.cumsum(panel)))
        self.T = float(self.x_b[-1])                 # quarter-arc x-length
        self._spline = CubicSpline(self.x_b, self.theta_b)

    def _psi(self, theta):
        # dx/dtheta = 2 sqrt(E) sin(th) / (sqrt(2 lam) |f(u(th))|)
        theta = np.asarray(theta, dtype=float)
        u = _inverse_nodes(self.nl, self.E * np.sin(theta) ** 2, self.side)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = (2.0 * np.sqrt(self.E) / np.sqrt(2.0 * self.lam)
                   * np.sin(theta) / np.abs(self.nl.f(u)))
        return np.where(theta <= 0.0, self._psi0, out)

    def x_of_theta(self, theta):
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        idx = np.clip(np.searchsorted(self.theta_b, theta, side="right") - 1,
                      0, self.PANELS - 1)
        a = self.theta_b[idx]
        tq, wq = _gl_raw(self.GL_ORDER)
        mid = 0.5 * (a + theta)
        half = 0.5 * (theta - a)
        nodes = mid[:, None] + half[:, None] * tq[None, :]
        part = (self._psi(nodes) * wq[None, :]).sum(axis=1) * half
        return self.x_b[idx] + part

    def theta_of_x(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        tc = np.clip(t, 0.0, self.T)
        th = np.clip(self._spline(tc), 0.0, np.pi / 2.0)
        for _ in range(2):
            resid = self.x_of_theta(th) - tc
            slope = np.maximum(self._psi(th), 1e-300)
            th = np.clip(th - resid / slope, 0.0, np.pi / 2.0)
        return th

    def u_of_x(self, t):
        """Arc value at distance t from the arc's zero; t > T plateaus at the top."""
        th = self.theta_of_x(t)
        return _inverse_nodes(self.nl, self.E * np.sin(th) ** 2, self.side)


def _arc_h1(nl: Nonlinearity, E: float, lambda_tilde: float, side: int,
            tol: float = 1e-12, max_order: int = 2048) -> float:
    """int over a quarter arc of (u')^2 dx = sqrt(2 lam) int sqrt(E - F) du.

    In theta variables the integrand is bounded up to the separatrix.
    """
    prev = None
    order = 32
    front = np.sqrt(2.0 * lambda_tilde) * 2.0 * E ** 1.5
    while True:
        th, w = _gl_quarter(order)
        u = _inverse_nodes(nl, E * np.sin(th) ** 2, side)
        val = front * float(np.sum(w * np.sin(th) * np.cos(th) ** 2 / np.abs(nl.f(u))))
        if prev is not None and abs(val - prev) <= tol * abs(val):
            return val
        if order >= max_order:
            return val
        prev, order = val, order * 2


def profile_h1_norm_sq(nl: Nonlinearity, k: int, lambda_tilde: float,
                       sign: int = 1) -> float:
    """Squared H^1_0 norm of the k-arch profile via the closed-form arc integral."""
    level = solve_energy_level(nl, k, lambda_tilde, sign)
    n_pos, n_neg = _arch_counts(k, sign)
    total = 0.0
    if n_pos:
        total += 2.0 * n_pos * _arc_h1(nl, level.E, lambda_tilde, 1)
    if n_neg:
        total += 2.0 * n_neg * _arc_h1(nl, level.E, lambda_tilde, -1)
    return total


def reconstruct_profile(nl: Nonlinearity, k: int, lambda_tilde: float,
                        sign: int = 1, grid_points: int = 1025,
                        level: Optional[EnergyLevel] = None) -> EquilibriumProfile:
    """Sample the k-arch profile on a uniform grid by inverting the arc maps.

    Arches alternate sign starting with ``sign``; within an arch the profile
    is symmetric about the midpoint.  For a clamped energy level the missing
    arch length is filled with the orbit's resting plateau at the arc top.
    """
    if grid_points < 3:
        raise ValueError("grid_points must be >= 3")
    if level is None:
        level = solve_energy_level(nl, k, lambda_tilde, sign)
    E = level.E

    sides = [1 if (sign > 0) == (j % 2 == 0) else -1 for j in range(k)]
    maps = {}
    for s in set(sides):
        maps[s] = _ArcMap(nl, E, lambda_tilde, s)

    lengths = np.array([2.0 * maps[s].T for s in sides])
    total = float(lengths.sum())
    if level.clamped and total < 1.0:
        # orbit dwells at the arc top; distribute the missing length evenly
        lengths = lengths + (1.0 - total) / k
    else:
        lengths = lengths / total
    bounds = np.concatenate(([0.0], np.cumsum(lengths)))
    bounds[-1] = 1.0

    x = np.linspace(0.0, 1.0, grid_points)
    arch = np.clip(np.searchsorted(bounds, x, side="right") - 1, 0, k - 1)
    xi = x - bounds[arch]
    t = np.minimum(xi, lengths[arch] - xi)

    side_of_arch = np.array(sides)
    u = np.empty_like(x)
    for s, m in maps.items():
        mask = side_of_arch[arch] == s
        if mask.any():
            u[mask] = m.u_of_x(np.minimum(t[mask], m.T))
    u[0] = 0.0
    u[-1] = 0.0

    n_pos, n_neg = _arch_counts(k, sign)
    d = 0.0
    if n_pos:
        d += 2.0 * n_pos * _arc_h1(nl, E, lambda_tilde, 1)
    if n_neg:
        d += 2.0 * n_neg * _arc_h1(nl, E, lambda_tilde, -1)

    v0 = float(sign) * np.sqrt(2.0 * lambda_tilde * E)
    u_max = max(abs(_scalar_inverse(nl, E, s)) for s in set(sides))
    samples = np.column_stack((x, u))
    return EquilibriumProfile(k=k, sign=int(np.sign(sign)), lambda_tilde=lambda_tilde,
                              E=E, d=float(d), v0=v0, u_max=u_max,
                              samples=samples, clamped=level.clamped)
