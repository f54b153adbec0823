"""Spectral Galerkin integration of the nonlocal equation.

Unknowns are coefficients against the orthonormal sine basis; the nonlinear
term is evaluated by dealiased collocation on a 4N-point grid (exact for
cubic products of the first N modes).  Time stepping is first-order
semi-implicit: the nonlocal coefficient a(||u||^2) is frozen over the step,
which keeps the implicit solve diagonal and damps high modes
unconditionally.  A per-sample energy monitor acts as the accept/reject
criterion (step halving on violation).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from . import basis
from .equilibria import EquilibriumSet, entry_ids
from .errors import DivergedError
from .model import ProblemSpec

__all__ = [
    "GalerkinState",
    "Trajectory",
    "OmegaLimit",
    "UNRESOLVED",
    "galerkin_rhs",
    "integrate",
    "lyapunov_energy",
    "energy_equality_residual",
    "lap_number",
    "lap_count",
    "classify_omega_limit",
    "initial_state",
    "absorbing_radius_l2",
    "equilibrium_coefficients",
]

_ENERGY_STEP_TOL = 1e-8


@dataclass(frozen=True)
class GalerkinState:
    """Truncated solution: coefficients c_j against w_j = sqrt(2) sin(j pi x)."""

    N: int
    coeffs: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.shape != (self.N,):
            raise ValueError(f"expected {self.N} coefficients, got shape {c.shape}")
        object.__setattr__(self, "coeffs", c)

    def l2_norm_sq(self) -> float:
        return basis.l2_norm_sq(self.coeffs)

    def h1_norm_sq(self) -> float:
        return basis.h1_norm_sq(self.coeffs)

    def values(self, grid_points: int = 257) -> np.ndarray:
        """u on the closed uniform grid with the requested point count."""
        interior = basis.coeffs_to_values(self.coeffs, grid_points - 1)
        return np.concatenate(([0.0], interior, [0.0]))


@dataclass
class Trajectory:
    """Sampled history of one integration run."""

    states: List[GalerkinState]
    energies: List[float]
    lap_numbers: List[int]
    dissipation: List[float]          # int ||u_t||^2 dt per sample interval
    rhs_norms: List[float]
    halving_events: int = 0
    energy_violations: int = 0
    stopped_steady: bool = False

    @property
    def times(self) -> np.ndarray:
        return np.array([s.time for s in self.states])


# ---------------------------------------------------------------------------
# right-hand side and energy


def _forcing_coeffs(h: float, N: int) -> np.ndarray:
    # <h, w_j> for constant h: h sqrt(2) (1 - (-1)^j) / (j pi)
    j = np.arange(1, N + 1, dtype=float)
    return h * np.sqrt(2.0) * (1.0 - np.cos(np.pi * j)) / (np.pi * j)


def galerkin_rhs(state: GalerkinState, spec: ProblemSpec) -> np.ndarray:
    """dc_i/dt = -a(||u||^2_H1) (i pi)^2 c_i + lam <f(u), w_i> + <h, w_i>."""
    N = state.N
    M = 4 * N
    c = state.coeffs
    jj = basis.eigenvalues(N)
    u = basis.coeffs_to_values(c, M)
    proj = basis.project_values(np.asarray(spec.nonlinearity.f(u), dtype=float), M, N)
    a_val = float(spec.diffusion.a(float(jj @ (c * c))))
    return -a_val * jj * c + spec.lam * proj + _forcing_coeffs(spec.h, N)


def lyapunov_energy(state: GalerkinState, spec: ProblemSpec) -> float:
    """E = A(||u||^2_H1)/2 - lam int F(u) - int h u, with int F by collocation."""
    N = state.N
    M = 4 * N
    c = state.coeffs
    h1 = basis.h1_norm_sq(c)
    u = basis.coeffs_to_values(c, M)
    intF = float(np.sum(np.asarray(spec.nonlinearity.F(u), dtype=float))) / M
    E = 0.5 * float(spec.diffusion.A(h1)) - spec.lam * intF
    if spec.h != 0.0:
        E -= float(_forcing_coeffs(spec.h, N) @ c)
    return E


def energy_equality_residual(traj: Trajectory, i: int, j: int) -> float:
    """|sum of dissipation increments + E_j - E_i| over samples i..j."""
    if not 0 <= i < j < len(traj.states):
        raise IndexError("need 0 <= i < j < number of samples")
    diss = sum(traj.dissipation[i:j])
    return abs(diss + traj.energies[j] - traj.energies[i])


# ---------------------------------------------------------------------------
# lap number


def lap_count(values: np.ndarray, deadband: float) -> int:
    """Maximal runs of constant nonzero sign after clamping |u| < deadband."""
    v = np.asarray(values, dtype=float)
    s = np.sign(np.where(np.abs(v) < deadband, 0.0, v))
    nz = s != 0.0
    if not nz.any():
        return 0
    starts = nz.copy()
    starts[1:] &= (~nz[:-1]) | (s[1:] != s[:-1])
    return int(np.sum(starts))


def lap_number(state: GalerkinState, grid_points: int = 257,
               deadband: Optional[float] = None) -> int:
    """Number of sign-definite components of u on (0, 1)."""
    if grid_points < 257:
        raise ValueError("grid_points must be >= 257")
    u = state.values(grid_points)
    if deadband is None:
        deadband = 1e-7 * max(1.0, float(np.max(np.abs(u))))
    return lap_count(u, deadband)


# ---------------------------------------------------------------------------
# dissipation-bound safety radius


def absorbing_radius_l2(spec: ProblemSpec) -> float:
    """Estimate of the L^2 absorbing radius sqrt(kappa/delta).

    Built from f(u) u <= m_eps + eps u^2 with eps = m pi^2 / 4, the constant
    found by grid search.  Returns inf when the sampled supremum sits on the
    search boundary (f not visibly dissipative).
    """
    m = spec.diffusion.lower_bound_m
    lam1 = np.pi * np.pi
    eps = 0.25 * m * lam1
    delta = m * lam1 - 2.0 * eps
    u_hi = 4.0
    u = np.linspace(-u_hi, u_hi, 20001)
    vals = spec.lam * np.asarray(spec.nonlinearity.f(u), dtype=float) * u - eps * u * u
    i = int(np.argmax(vals))
    if i in (0, len(u) - 1):
        return np.inf
    m_eps = max(float(vals[i]), 0.0)
    kappa = 2.0 * m_eps + spec.h * spec.h / (lam1 * m)
    return float(np.sqrt(kappa / delta)) if kappa > 0 else 1.0


# ---------------------------------------------------------------------------
# integration


def integrate(initial: GalerkinState, spec: ProblemSpec, t_end: float, dt: float,
              sample_interval: float = 1e-2,
              deadband: Optional[float] = None,
              lap_grid_points: int = 257,
              stop_rhs_norm: Optional[float] = None,
              max_halvings: int = 10,
              mode_mask: Optional[np.ndarray] = None) -> Trajectory:
    """Semi-implicit integration with per-sample energy monitoring.

    Each sample interval is accepted only if the Lyapunov energy did not
    increase by more than 1e-8; otherwise the interval is redone with a
    halved step (up to ``max_halvings``, then the violation is recorded).
    ``stop_rhs_norm`` stops early once ||dc/dt||_{L^2} falls below it.

    ``mode_mask`` restricts the run to an invariant coefficient lattice
    (roundoff outside the lattice is projected away after every step); it is
    only sound when the lattice really is flow-invariant, e.g. modes
    {j, 3j, 5j, ...} for odd f with h = 0.
    """
    if dt <= 0 or t_end <= 0:
        raise ValueError("dt and t_end must be positive")
    N = initial.N
    M = 4 * N
    jj = basis.eigenvalues(N)
    S = basis.basis_matrix(M, N)
    St_w = S.T / M
    f = spec.nonlinearity.f
    F = spec.nonlinearity.F
    a = spec.diffusion.a
    A = spec.diffusion.A
    lam = spec.lam
    h_proj = _forcing_coeffs(spec.h, N) if spec.h != 0.0 else None
    radius = absorbing_radius_l2(spec)
    l2_cap = (10.0 * radius) ** 2 if np.isfinite(radius) else np.inf

    steps_per_sample = max(1, int(round(sample_interval / dt)))
    n_samples = max(1, int(round(t_end / (steps_per_sample * dt))))

    def energy_of(c: np.ndarray) -> float:
        u = S @ c
        e = 0.5 * float(A(float(jj @ (c * c)))) - lam * float(np.sum(F(u))) / M
        if h_proj is not None:
            e -= float(h_proj @ c)
        return e

    if mode_mask is not None:
        mode_mask = np.asarray(mode_mask, dtype=bool)
        if mode_mask.shape != (N,):
            raise ValueError("mode_mask must have one entry per coefficient")

    def advance(c: np.ndarray, step: float, nsteps: int):
        diss = 0.0
        for _ in range(nsteps):
            u = S @ c
            w = np.asarray(f(u), dtype=float)
            proj = St_w @ w
            a_n = float(a(float(jj @ (c * c))))
            rhs = lam * proj
            if h_proj is not None:
                rhs = rhs + h_proj
            c_new = (c + step * rhs) / (1.0 + step * a_n * jj)
            if mode_mask is not None:
                c_new = np.where(mode_mask, c_new, 0.0)
            delta = c_new - c
            diss += float(delta @ delta) / step
            c = c_new
        return c, diss

    traj = Trajectory(states=[GalerkinState(N, initial.coeffs.copy(), initial.time)],
                      energies=[energy_of(initial.coeffs)],
                      lap_numbers=[], dissipation=[], rhs_norms=[])
    lap0 = _lap_of(initial.coeffs, N, lap_grid_points, deadband)
    traj.lap_numbers.append(lap0)

    c = initial.coeffs.copy()
    t = initial.time
    for _ in range(n_samples):
        e_prev = traj.energies[-1]
        step = dt
        nsteps = steps_per_sample
        halvings = 0
        while True:
            c_cand, diss = advance(c.copy(), step, nsteps)
            e_new = energy_of(c_cand)
            if e_new <= e_prev + _ENERGY_STEP_TOL or halvings >= max_halvings:
                break
            step *= 0.5
            nsteps *= 2
            halvings += 1
        if halvings:
            traj.halving_events += 1
        if not np.all(np.isfinite(c_cand)):
            raise DivergedError("non-finite coefficients; scheme instability")
        if e_new > e_prev + _ENERGY_STEP_TOL:
            traj.energy_violations += 1
        c = c_cand
        t += steps_per_sample * dt
        if float(c @ c) > l2_cap:
            raise DivergedError(
                f"||u||_L2 exceeded 10x the absorbing-radius estimate {radius:.3g}")

        traj.states.append(GalerkinState(N, c.copy(), t))
        traj.energies.append(e_new)
        traj.dissipation.append(diss)
        traj.lap_numbers.append(_lap_of(c, N, lap_grid_points, deadband))
        rhs_norm = _rhs_norm(c, S, St_w, jj, f, a, lam, h_proj, M)
        traj.rhs_norms.append(rhs_norm)
        if stop_rhs_norm is not None and rhs_norm < stop_rhs_norm:
            traj.stopped_steady = True
            break
    return traj


def _lap_of(c, N, grid_points, deadband):
    interior = basis.coeffs_to_values(c, grid_points - 1)
    u = np.concatenate(([0.0], interior, [0.0]))
    db = deadband if deadband is not None else 1e-7 * max(1.0, float(np.max(np.abs(u))))
    return lap_count(u, db)


def _rhs_norm(c, S, St_w, jj, f, a, lam, h_proj, M):
    u = S @ c
    proj = St_w @ np.asarray(f(u), dtype=float)
    a_n = float(a(float(jj @ (c * c))))
    rhs = -a_n * jj * c + lam * proj
    if h_proj is not None:
        rhs = rhs + h_proj
    return float(np.sqrt(rhs @ rhs))


# ---------------------------------------------------------------------------
# initial data and omega-limit classification


def initial_state(spec: ProblemSpec, N: int, kind: str = "zero",
                  seed: int = 0, amplitude: float = 1e-3,
                  mode: int = 1, decay: float = 1.5) -> GalerkinState:
    """Builders for the standard initial conditions.

    ``mode`` data is u0 = amplitude * sin(mode pi x); ``random`` draws seeded
    coefficients with spectral decay j^-decay, normalized to L^2 norm
    ``amplitude``.
    """
    c = np.zeros(N)
    if kind == "zero":
        pass
    elif kind == "mode":
        if not 1 <= mode <= N:
            raise ValueError(f"mode must be in 1..{N}")
        c[mode - 1] = amplitude / np.sqrt(2.0)
    elif kind == "random":
        rng = np.random.default_rng(seed)
        j = np.arange(1, N + 1, dtype=float)
        c = rng.standard_normal(N) / j ** decay
        norm = np.sqrt(c @ c)
        if norm > 0:
            c *= amplitude / norm
    else:
        raise ValueError(f"unknown initial kind {kind!r}")
    return GalerkinState(N, c)


def equilibrium_coefficients(eqset: EquilibriumSet, N: int):
    """(id, coefficients) for every stationary point including zero."""
    out = [("0", np.zeros(N))]
    for ident, entry in zip(entry_ids(eqset), eqset.entries):
        out.append((ident, basis.project_closed_samples(entry.samples, N)))
    return out


UNRESOLVED = "Unresolved"


@dataclass(frozen=True)
class OmegaLimit:
    ident: str
    distance: float

    @property
    def resolved(self) -> bool:
        return self.ident != UNRESOLVED


def classify_omega_limit(traj: Trajectory, eqset: EquilibriumSet,
                         tol: float = 1e-3) -> OmegaLimit:
    """Nearest equilibrium (H^1_0 metric) of the final state, within tol."""
    final = traj.states[-1]
    jj = basis.eigenvalues(final.N)
    best_id, best_dist = UNRESOLVED, np.inf
    for ident, coeffs in equilibrium_coefficients(eqset, final.N):
        delta = final.coeffs - coeffs
        dist = float(np.sqrt(jj @ (delta * delta)))
        if dist < best_dist:
            best_id, best_dist = ident, dist
    if best_dist <= tol:
        return OmegaLimit(best_id, best_dist)
    return OmegaLimit(UNRESOLVED, best_dist)
