"""Stationary points of the nonlocal problem and bifurcation sweeps.

A frozen-coefficient profile with k+1 zeros exists at nonlocal value d when
a(d) < lambda / (pi k)^2; its squared H^1_0 norm defines

    g(d) = ||u_k^{lambda/a(d)}||^2_{H^1_0},    g(d) = 0 once a(d) >= lambda/(pi k)^2,

and the nonlocal equilibria are the solutions of d = g(d).  An independent
shooting integrator cross-checks the time-map construction.
"""

from __future__ import annotations

import io
import json
import warnings
import weakref
from dataclasses import dataclass, replace
from typing import List

import numpy as np
from scipy.interpolate import PchipInterpolator

from . import timemap
from .errors import ShootingOverflowError
from .model import Nonlinearity, ProblemSpec

__all__ = [
    "NonlocalRoot",
    "EquilibriumSet",
    "BranchPoint",
    "BifurcationDiagram",
    "ShootResult",
    "d_k_threshold",
    "g_of_d",
    "solve_nonlocal_fixed_points",
    "enumerate_equilibria",
    "shoot",
    "bifurcation_diagram",
    "equilibrium_set_to_json",
    "bifurcation_to_csv",
]

D_MAX = 1e3
_SCAN_STEP_FLOOR = 1e-3
_ROOT_TOL = 1e-11
_TANGENT_GPRIME_TOL = 1e-4
_TANGENT_BAND = 1e-9


@dataclass(frozen=True)
class NonlocalRoot:
    """A solution of d = g(d); ``degenerate`` flags near-tangency to the bisector."""

    d: float
    degenerate: bool = False


@dataclass(frozen=True)
class EquilibriumSet:
    """All stationary points at one lambda; the zero profile is implicit."""

    lam: float
    entries: tuple
    includes_zero: bool = True

    @property
    def count(self) -> int:
        return len(self.entries) + 1


@dataclass(frozen=True)
class BranchPoint:
    lam: float
    k: int
    branch_index: int
    d_star: float
    E: float
    v0: float
    sup_u: float
    degenerate: bool = False


@dataclass(frozen=True)
class BifurcationDiagram:
    lambda_grid: np.ndarray
    rows: tuple   # BranchPoint, ordered lambda asc, k asc, branch asc


@dataclass(frozen=True)
class ShootResult:
    u_end: float
    zero_count: int
    profile: np.ndarray   # (n+1, 2) rows of (x, u)


# ---------------------------------------------------------------------------
# thresholds and g


def d_k_threshold(k: int, spec: ProblemSpec) -> float:
    """sup of d such that a(s) stays below lambda/(pi k)^2 for all s <= d.

    Forward scan (step 1e-2) followed by bisection of the first crossing to
    1e-10; +inf when no crossing occurs up to D_MAX.
    """
    level = spec.lam / (np.pi * np.pi * k * k)
    a = spec.diffusion.a
    if float(a(0.0)) >= level:
        return 0.0
    s_grid = np.arange(0.0, D_MAX + 1e-2, 1e-2)
    vals = np.asarray(a(s_grid), dtype=float)
    above = np.flatnonzero(vals >= level)
    if above.size == 0:
        return np.inf
    i = above[0]
    lo, hi = s_grid[i - 1], s_grid[i]
    while hi - lo > 1e-10:
        mid = 0.5 * (lo + hi)
        if float(a(mid)) >= level:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def g_of_d(k: int, d: float, spec: ProblemSpec, sign: int = 1,
           norm: str = "h1") -> float:
    """g(d) with the continuation convention g = 0 past the threshold.

    Only the H^1_0 functional is implemented; the signature keeps a norm
    selector so Lp-type nonlocal functionals can slot in later.
    """
    if norm != "h1":
        raise NotImplementedError("only the H^1_0 nonlocal functional is implemented")
    if d < 0:
        raise ValueError("d must be nonnegative")
    level = spec.lam / (np.pi * np.pi * k * k)
    ad = float(spec.diffusion.a(d))
    if ad >= level:
        return 0.0
    return timemap.profile_h1_norm_sq(spec.nonlinearity, k, spec.lam / ad, sign)


# ---------------------------------------------------------------------------
# cached norm curve G(lambda_tilde) used to bracket roots cheaply;
# every reported root is refined against the exact g

_curve_cache: "weakref.WeakKeyDictionary" = weakref.WeakKeyDictionary()
_CURVE_NODES = 320


class _NormCurve:
    def __init__(self, nl: Nonlinearity, k: int):
        self.nl = nl
        self.k = k
        self.thresh = k * k * np.pi * np.pi
        self.hi = 0.0
        self._interp = None

    def ensure(self, lam_t_max: float) -> None:
        lam_t_max = max(lam_t_max, self.thresh * 1.5)
        if self._interp is not None and lam_t_max <= self.hi:
            return
        self.hi = lam_t_max * 1.05
        span = self.hi - self.thresh
        t = np.linspace(0.0, 1.0, _CURVE_NODES)[1:]
        nodes = self.thresh + span * t * t   # cluster near the threshold
        vals = np.array([timemap.profile_h1_norm_sq(self.nl, self.k, float(x))
                         for x in nodes])
        xs = np.concatenate(([self.thresh], nodes))
        ys = np.concatenate(([0.0], vals))
        self._interp = PchipInterpolator(xs, ys, extrapolate=False)

    def __call__(self, lam_t: np.ndarray) -> np.ndarray:
        lam_t = np.asarray(lam_t, dtype=float)
        out = np.zeros_like(lam_t)
        mask = lam_t > self.thresh
        if mask.any():
            self.ensure(float(lam_t[mask].max()))
            out[mask] = self._interp(lam_t[mask])
        return out


def _norm_curve(nl: Nonlinearity, k: int) -> _NormCurve:
    per_nl = _curve_cache.setdefault(nl, {})
    if k not in per_nl:
        per_nl[k] = _NormCurve(nl, k)
    return per_nl[k]


# ---------------------------------------------------------------------------
# nonlocal fixed points


def solve_nonlocal_fixed_points(k: int, spec: ProblemSpec) -> List[NonlocalRoot]:
    """All roots of g(d) - d on [0, D_MAX].

    Sign changes are located on the documented scan grid (a fast interpolant
    of the norm curve brackets them); each bracket is then bisected on the
    exact g to 1e-11.  Near-tangent brackets are flagged degenerate.
    """
    spec.require_autonomous_homogeneous("solve_nonlocal_fixed_points")
    nl, diff, lam = spec.nonlinearity, spec.diffusion, spec.lam
    level = lam / (np.pi * np.pi * k * k)
    if float(diff.a(0.0)) >= level:
        return []

    d_k = d_k_threshold(k, spec)
    step = max(_SCAN_STEP_FLOOR, (d_k if np.isfinite(d_k) else D_MAX) / 1e4)
    grid = np.arange(0.0, D_MAX + step, step)
    a_vals = np.asarray(diff.a(grid), dtype=float)
    curve = _norm_curve(nl, k)
    with np.errstate(divide="ignore"):
        lam_t = np.where(a_vals > 0, lam / a_vals, np.inf)
    g_vals = np.where(a_vals < level, curve(lam_t), 0.0)
    h = g_vals - grid

    if g_vals[-1] > grid[-1]:
        warnings.warn(f"g(d_max) = {g_vals[-1]:.3g} > d_max = {grid[-1]:.3g}; "
                      "the root scan may be truncated", stacklevel=2)

    memo: dict = {}

    def g_exact(d: float) -> float:
        d = float(d)
        if d not in memo:
            memo[d] = g_of_d(k, d, spec)
        return memo[d]

    roots: List[NonlocalRoot] = []
    sign_changes = np.flatnonzero(np.sign(h[:-1]) * np.sign(h[1:]) < 0)
    last = grid.size - 1
    for i in sign_changes:
        # widen by one cell each side to absorb interpolant error
        lo = float(grid[max(i - 1, 0)])
        hi = float(grid[min(i + 2, last)])
        flo = g_exact(lo) - lo
        fhi = g_exact(hi) - hi
        if flo == 0.0:
            root = lo
        elif fhi == 0.0:
            root = hi
        elif flo * fhi > 0:
            continue   # interpolant artifact
        else:
            while hi - lo > _ROOT_TOL:
                mid = 0.5 * (lo + hi)
                if (g_exact(mid) - mid) * flo > 0:
                    lo = mid
                else:
                    hi = mid
            root = 0.5 * (lo + hi)
        roots.append(NonlocalRoot(root, _is_degenerate(g_exact, root)))

    # tangency without a sign change: |g - d| below band over a plateau
    near = np.abs(h) < _TANGENT_BAND
    if near.any() and not sign_changes.size:
        idx = int(np.argmin(np.abs(h)))
        d0 = float(grid[idx])
        roots.append(NonlocalRoot(d0, True))

    roots.sort(key=lambda r: r.d)
    deduped: List[NonlocalRoot] = []
    for r in roots:
        if not deduped or r.d - deduped[-1].d > 10 * _ROOT_TOL:
            deduped.append(r)

    if diff.nondecreasing:
        assert len(deduped) <= 1, (
            "nondecreasing diffusion admits a single root of g(d) = d; "
            f"scan found {len(deduped)}")
    return deduped


def _is_degenerate(g_exact, d: float, fd_step: float = 1e-5) -> bool:
    lo = max(d - fd_step, 0.0)
    gp = (g_exact(d + fd_step) - g_exact(lo)) / (d + fd_step - lo)
    return abs(gp - 1.0) < _TANGENT_GPRIME_TOL


def entry_ids(eqset: EquilibriumSet):
    """Stable identifiers for the nonzero entries ("u1+", "u2-", ...).

    When a k carries several d* branches the id gains a branch suffix in
    ascending-d order ("u1+.0", "u1+.1", ...).
    """
    from collections import Counter

    counts = Counter((p.k, p.sign) for p in eqset.entries)
    seen: Counter = Counter()
    ids = []
    for p in eqset.entries:
        key = (p.k, p.sign)
        sgn = "+" if p.sign > 0 else "-"
        if counts[key] == 1:
            ids.append(f"u{p.k}{sgn}")
        else:
            ids.append(f"u{p.k}{sgn}.{seen[key]}")
            seen[key] += 1
    return tuple(ids)


def enumerate_equilibria(spec: ProblemSpec) -> EquilibriumSet:
    """Zero plus the +/- profile pair for every root of d = g(d), every k."""
    spec.require_autonomous_homogeneous("enumerate_equilibria")
    lam = spec.lam
    a0 = float(spec.diffusion.a(0.0))
    entries = []
    k = 1
    while a0 * np.pi * np.pi * k * k < lam:
        for root in solve_nonlocal_fixed_points(k, spec):
            ad = float(spec.diffusion.a(root.d))
            lam_t = lam / ad
            for sgn in (1, -1):
                entries.append(timemap.reconstruct_profile(
                    spec.nonlinearity, k, lam_t, sgn, spec.grid_points))
        k += 1
    return EquilibriumSet(lam=lam, entries=tuple(entries))


# ---------------------------------------------------------------------------
# independent shooting oracle (shares no machinery with the time maps)

# Yoshida's 4th-order symmetric composition of leapfrog steps
_Y_W1 = 1.0 / (2.0 - 2.0 ** (1.0 / 3.0))
_Y_W0 = -(2.0 ** (1.0 / 3.0)) * _Y_W1
_Y_C = (_Y_W1 / 2.0, (_Y_W0 + _Y_W1) / 2.0, (_Y_W0 + _Y_W1) / 2.0, _Y_W1 / 2.0)
_Y_D = (_Y_W1, _Y_W0, _Y_W1, 0.0)


def shoot(nl: Nonlinearity, lambda_tilde: float, v0: float,
          step_count: int = 10_000) -> ShootResult:
    """Integrate u'' + lam_t f(u) = 0, u(0) = 0, u'(0) = v0 across [0, 1].

    Fixed-step 4th-order symmetric (symplectic) scheme; conserves the orbit
    level to fourth order in the step.
    """
    if step_count < 1_000:
        raise ValueError("step_count must be >= 1000")
    bound = _overflow_bound(nl)
    h = 1.0 / step_count
    f = nl.f
    u, v = 0.0, float(v0)
    us = np.empty(step_count + 1)
    us[0] = u
    for i in range(step_count):
        for c, d in zip(_Y_C, _Y_D):
            u += c * h * v
            if d:
                v -= d * h * lambda_tilde * float(f(u))
        if abs(u) > bound:
            raise ShootingOverflowError(
                f"|u| = {abs(u):.3g} exceeded {bound:.3g} at step {i + 1}")
        us[i + 1] = u
    # deadband keeps the boundary zeros (roundoff-sized samples) out of the count
    scale = float(np.max(np.abs(us))) or 1.0
    signs = np.sign(us[np.abs(us) > 1e-9 * scale])
    zero_count = int(np.sum(signs[:-1] != signs[1:]))
    x = np.linspace(0.0, 1.0, step_count + 1)
    return ShootResult(u_end=float(us[-1]), zero_count=zero_count,
                       profile=np.column_stack((x, us)))


def _overflow_bound(nl: Nonlinearity) -> float:
    bounds = []
    for side, inverse in ((1, timemap.positive_inverse), (-1, timemap.negative_inverse)):
        sup = timemap.sup_F(nl, side)
        if np.isfinite(sup):
            bounds.append(abs(inverse(nl, sup * (1 - 1e-9))))
    return 10.0 * max(bounds) if bounds else np.inf


# ---------------------------------------------------------------------------
# bifurcation sweep


def bifurcation_diagram(spec_template: ProblemSpec, lambda_range,
                        steps: int) -> BifurcationDiagram:
    """d* branches per (lambda, k) over a lambda sweep, deterministic order."""
    lam_min, lam_max = float(lambda_range[0]), float(lambda_range[1])
    if not (0.0 < lam_min < lam_max):
        raise ValueError("need 0 < lambda_min < lambda_max")
    if steps < 1:
        raise ValueError("steps must be >= 1")
    lams = np.linspace(lam_min, lam_max, steps)
    a0 = float(spec_template.diffusion.a(0.0))
    rows = []
    for lam in lams:
        spec = replace(spec_template, lam=float(lam))
        k = 1
        while a0 * np.pi * np.pi * k * k < lam:
            for bi, root in enumerate(solve_nonlocal_fixed_points(k, spec)):
                ad = float(spec.diffusion.a(root.d))
                lam_t = lam / ad
                lvl = timemap.solve_energy_level(spec.nonlinearity, k, lam_t)
                rows.append(BranchPoint(
                    lam=float(lam), k=k, branch_index=bi, d_star=root.d,
                    E=lvl.E, v0=float(np.sqrt(2.0 * lam_t * lvl.E)),
                    sup_u=float(timemap.positive_inverse(spec.nonlinearity, lvl.E)),
                    degenerate=root.degenerate))
            k += 1
    return BifurcationDiagram(lambda_grid=lams, rows=tuple(rows))


# ---------------------------------------------------------------------------
# serialization


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def bifurcation_to_csv(diagram: BifurcationDiagram) -> str:
    buf = io.StringIO()
    buf.write("lambda,k,branch_index,d_star,E,v0,sup_u\n")
    for r in diagram.rows:
        buf.write(",".join([_fmt(r.lam), str(r.k), str(r.branch_index),
                            _fmt(r.d_star), _fmt(r.E), _fmt(r.v0), _fmt(r.sup_u)]))
        buf.write("\n")
    return buf.getvalue()


def equilibrium_set_to_json(eqset: EquilibriumSet) -> str:
    payload = []
    for p in eqset.entries:
        payload.append({
            "k": p.k,
            "sign": p.sign,
            "d": p.d,
            "E": p.E,
            "lambda_tilde": p.lambda_tilde,
            "v0": p.v0,
            "samples": [[float(x), float(u)] for x, u in p.samples],
        })
    return json.dumps(payload)
