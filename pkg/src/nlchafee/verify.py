"""Property suite behind the ``verify`` command and the acceptance tests.

Each criterion returns a machine-readable record
{criterion_id, status, measured, tolerance, seconds}.  Randomized suites are
seeded; independent trajectories run across processes when more than one CPU
is available.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Optional

import numpy as np

from . import basis, dynamics, equilibria, stability, timemap
from .config import RunConfig
from .model import ProblemSpec, affine_diffusion, builtin_cubic, constant_diffusion, table_diffusion

__all__ = ["CriterionResult", "run_all", "CRITERIA", "fig2_table_diffusion"]


@dataclass
class CriterionResult:
    criterion_id: str
    status: str                 # "pass" | "fail"
    measured: object
    tolerance: object
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def as_dict(self) -> dict:
        return {"criterion_id": self.criterion_id, "status": self.status,
                "measured": self.measured, "tolerance": self.tolerance,
                "seconds": round(self.seconds, 3)}


def _result(cid, ok, measured, tolerance, t0):
    return CriterionResult(cid, "pass" if ok else "fail", measured, tolerance,
                           time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# criterion implementations


def _c01_equilibrium_cascade(cfg: RunConfig) -> CriterionResult:
    t0 = time.perf_counter()
    nl = builtin_cubic()
    counts = {}
    for lam in (5.0, 20.0, 50.0, 95.0):
        spec = ProblemSpec(lam, nl, constant_diffusion(1.0))
        counts[lam] = equilibria.enumerate_equilibria(spec).count
    expected = {5.0: 1, 20.0: 3, 50.0: 5, 95.0: 7}
    return _result("equilibrium_cascade", counts == expected, counts,
                   "exact counts {1,3,5,7}", t0)


def _c02_nonlocal_uniqueness(cfg: RunConfig) -> CriterionResult:
    t0 = time.perf_counter()
    spec = ProblemSpec(50.0, builtin_cubic(), affine_diffusion(1.0, 1.0))
    eqset = equilibria.enumerate_equilibria(spec)
    roots = {k: equilibria.solve_nonlocal_fixed_points(k, spec) for k in (1, 2)}
    residual = max(abs(equilibria.g_of_d(k, r.d, spec) - r.d)
                   for k, rs in roots.items() for r in rs)
    ok = (eqset.count == 5 and all(len(rs) == 1 for rs in roots.values())
          and residual < 1e-9)
    return _result("nonlocal_uniqueness",
                   ok, {"count": eqset.count, "residual": residual}, "5 eqs, |g(d*)-d*| < 1e-9", t0)


def _c03_small_energy_time_map(cfg: RunConfig) -> CriterionResult:
    t0 = time.perf_counter()
    nl = builtin_cubic()
    errs = {lt: abs(timemap.time_map(nl, lt, 1e-8) * np.sqrt(2 * lt) / np.pi - 1.0)
            for lt in (15.0, 40.0, 90.0)}
    return _result("small_energy_time_map", max(errs.values()) < 1e-3, errs, 1e-3, t0)


def _c04_oracle_equivalence(cfg: RunConfig) -> CriterionResult:
    t0 = time.perf_counter()
    nl = builtin_cubic()
    sups = {}
    for k in (1, 2, 3):
        n = 20_000
        prof = timemap.reconstruct_profile(nl, k, 120.0, 1, n + 1)
        shot = equilibria.shoot(nl, 120.0, prof.v0, n)
        sups[k] = float(np.max(np.abs(shot.profile[:, 1] - prof.samples[:, 1])))
    return _result("oracle_equivalence", max(sups.values()) < 1e-6, sups, 1e-6, t0)


def _c05_norm_monotonic(cfg: RunConfig) -> CriterionResult:
    t0 = time.perf_counter()
    nl = builtin_cubic()
    pi2 = np.pi * np.pi
    lts = pi2 + (400.0 - pi2) * np.arange(1, 51) / 50.0
    gs = np.array([timemap.profile_h1_norm_sq(nl, 1, float(lt)) for lt in lts])
    inversions = int(np.sum(np.diff(gs) <= 0.0))
    return _result("norm_monotonic", inversions == 0,
                   {"inversions": inversions, "g_min": float(gs[0]), "g_max": float(gs[-1])},
                   "zero inversions over 50 samples", t0)


def fig2_table_diffusion():
    """Non-monotone a: a(0) = a(d_bar) = 1 with a bump above lambda/pi^2 = 5.066.

    Crossing the level twice below d_bar < g(0) forces at least three
    intersections of g with the bisector at lambda = 50, k = 1.
    """
    s = [0.0, 0.8, 1.4, 2.0, 2.6, 3.2, 10.0]
    a = [1.0, 1.0, 6.0, 6.0, 1.0, 1.0, 1.0]
    return s, a


def _c06_fig2_multiplicity(cfg: RunConfig) -> CriterionResult:
    t0 = time.perf_counter()
    s, a = fig2_table_diffusion()
    spec = ProblemSpec(50.0, builtin_cubic(), table_diffusion(s, a, name="fig2-bump"))
    roots = equilibria.solve_nonlocal_fixed_points(1, spec)
    ds = [r.d for r in roots]
    return _result("fig2_multiplicity", len(roots) >= 3, {"roots": ds}, ">= 3 roots", t0)


# -- randomized trajectory suites (criteria 7, 8) ---------------------------


def _suite_worker(args):
    (seed, lam, a0, slope, N, dt, t_end, sample_interval, amplitude) = args
    spec = ProblemSpec(lam, builtin_cubic(), affine_diffusion(a0, slope))
    state = dynamics.initial_state(spec, N, "random", seed=seed, amplitude=amplitude)
    traj = dynamics.integrate(state, spec, t_end=t_end, dt=dt,
                              sample_interval=sample_interval)
    e = np.array(traj.energies)
    energy_increases = int(np.sum(np.diff(e) > 1e-8))
    laps = np.array(traj.lap_numbers)
    lap_increases = int(np.sum(np.diff(laps) > 0))
    return {"seed": seed,
            "energy_increases": energy_increases,
            "halvings": traj.halving_events,
            "violations": traj.energy_violations,
            "lap_increases": lap_increases}


def _run_trajectory_suite(cfg: RunConfig):
    n_traj = cfg.verify.trajectories
    args = [(seed, 50.0, 1.0, 1.0, 64, cfg.solver.dt, cfg.verify.t_end,
             cfg.solver.sample_interval, 1.0) for seed in range(n_traj)]
    workers = min(os.cpu_count() or 1, 4)
    if workers > 1 and n_traj > 1:
        try:
            with ProcessPoolExecutor(max_workers=workers) as ex:
                return list(ex.map(_suite_worker, args, chunksize=max(1, n_traj // workers)))
        except (OSError, RuntimeError):
            pass
    return [_suite_worker(a) for a in args]


_suite_cache: dict = {}


def _suite_results(cfg: RunConfig):
    key = (cfg.verify.trajectories, cfg.solver.dt, cfg.verify.t_end,
           cfg.solver.sample_interval)
    if key not in _suite_cache:
        _suite_cache[key] = _run_trajectory_suite(cfg)
    return _suite_cache[key]


def _c07_lyapunov_monotone(cfg: RunConfig) -> CriterionResult:
    t0 = time.perf_counter()
    rows = _suite_results(cfg)
    bad = sum(r["energy_increases"] + r["halvings"] + r["violations"] for r in rows)
    return _result("lyapunov_monotone", bad == 0,
                   {"trajectories": len(rows), "offending_steps": bad},
                   "zero energy increases beyond 1e-8 per step", t0)


def _c08_lap_monotone(cfg: RunConfig) -> CriterionResult:
    t0 = time.perf_counter()
    rows = _suite_results(cfg)
    bad = sum(r["lap_increases"] for r in rows)
    return _result("lap_monotone", bad == 0,
                   {"trajectories": len(rows), "lap_increases": bad},
                   "lap sequences non-increasing", t0)


def _c09_zero_instability(cfg: RunConfig) -> CriterionResult:
    t0 = time.perf_counter()
    nl = builtin_cubic()
    counts = {}
    for lam in (5.0, 20.0, 50.0, 95.0):
        spec = ProblemSpec(lam, nl, constant_diffusion(1.0))
        rep = stability.linearization_report(
            "0", stability.linearization_matrix(None, spec, 64))
        counts[lam] = rep.unstable_count
    expected = {lam: sum(1 for j in range(1, 100) if lam > j * j * np.pi * np.pi)
                for lam in counts}
    return _result("zero_instability", counts == expected, counts,
                   "#{j: lambda > a(0) j^2 pi^2} exactly", t0)


def _c10_u1_stability(cfg: RunConfig) -> CriterionResult:
    t0 = time.perf_counter()
    spec = ProblemSpec(20.0, builtin_cubic(), affine_diffusion(1.0, 1.0))
    eqset = equilibria.enumerate_equilibria(spec)
    N = 64
    jj = basis.eigenvalues(N)
    max_re = -np.inf
    targets = {}
    for ident, entry in zip(equilibria.entry_ids(eqset), eqset.entries):
        rep = stability.linearization_report(
            ident, stability.linearization_matrix(entry, spec, N))
        max_re = max(max_re, float(rep.eigenvalues[0]))
        targets[ident] = basis.project_closed_samples(entry.samples, N)
    rng = np.random.default_rng(cfg.seed)
    c_star = targets["u1+"]
    max_dist = 0.0
    for _ in range(cfg.verify.stability_probes):
        v = rng.standard_normal(N)
        v /= np.sqrt(jj @ (v * v))
        state = dynamics.GalerkinState(N, c_star + 1e-3 * v)
        traj = dynamics.integrate(state, spec, t_end=10.0, dt=cfg.solver.dt,
                                  stop_rhs_norm=1e-9)
        delta = traj.states[-1].coeffs - c_star
        max_dist = max(max_dist, float(np.sqrt(jj @ (delta * delta))))
    ok = max_re < -1e-6 and max_dist < 1e-4
    return _result("u1_stability", ok,
                   {"max_eigenvalue": max_re, "max_return_distance": max_dist},
                   "eigs < -1e-6 and return within 1e-4", t0)


def _c11_connection_graph(cfg: RunConfig) -> CriterionResult:
    t0 = time.perf_counter()
    spec = ProblemSpec(50.0, builtin_cubic(), affine_diffusion(1.0, 1.0))
    eqset = equilibria.enumerate_equilibria(spec)
    try:
        graph = stability.probe_connections(eqset, spec)
    except stability.MorseViolationError as exc:
        return _result("connection_graph", False,
                       {"violations": exc.violations}, "no violations", t0)
    required = [e for e in graph.edges if e.provenance == "required"]
    unwitnessed = [f"{e.src}->{e.dst}" for e in required if not e.witnessed]
    violations = stability.check_morse_order(graph)
    ok = not unwitnessed and not violations
    return _result("connection_graph", ok,
                   {"required_edges": len(required), "unwitnessed": unwitnessed,
                    "observed_edges": sum(1 for e in graph.edges if e.witnessed),
                    "violations": violations},
                   "required edges observed; no forbidden edges", t0)


def _c12_energy_residual_halving(cfg: RunConfig) -> CriterionResult:
    t0 = time.perf_counter()
    spec = ProblemSpec(50.0, builtin_cubic(), affine_diffusion(1.0, 1.0))
    ratios = []
    for seed in range(cfg.verify.residual_trajectories):
        # smooth data (spectral decay 4): the consistency check presupposes a
        # resolved stiff layer, where the defect is genuinely first order
        state = dynamics.initial_state(spec, 64, "random", seed=seed,
                                       amplitude=1.0, decay=4.0)
        res = []
        for dt in (cfg.solver.dt, cfg.solver.dt / 2.0):
            traj = dynamics.integrate(state, spec, t_end=1.0, dt=dt,
                                      sample_interval=cfg.solver.sample_interval)
            res.append(dynamics.energy_equality_residual(traj, 0, len(traj.states) - 1))
        ratios.append(res[0] / res[1] if res[1] > 0 else np.inf)
    ok = all(1.5 <= r <= 2.5 for r in ratios)
    return _result("energy_residual_halving", ok, {"ratios": ratios}, "2 +/- 0.5", t0)


CRITERIA: List[Callable[[RunConfig], CriterionResult]] = [
    _c01_equilibrium_cascade,
    _c02_nonlocal_uniqueness,
    _c03_small_energy_time_map,
    _c04_oracle_equivalence,
    _c05_norm_monotonic,
    _c06_fig2_multiplicity,
    _c07_lyapunov_monotone,
    _c08_lap_monotone,
    _c09_zero_instability,
    _c10_u1_stability,
    _c11_connection_graph,
    _c12_energy_residual_halving,
]


def run_all(cfg: Optional[RunConfig] = None, echo=None) -> List[CriterionResult]:
    cfg = cfg or RunConfig()
    results = []
    for criterion in CRITERIA:
        res = criterion(cfg)
        results.append(res)
        if echo is not None:
            echo(f"[{res.status.upper():4s}] {res.criterion_id} "
                 f"(measured={res.measured}, tol={res.tolerance}, {res.seconds:.1f}s)")
    _suite_cache.clear()
    return results
