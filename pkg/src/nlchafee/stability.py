"""Linearized stability and the heteroclinic connection graph.

The directional derivative of the right-hand side at a stationary point u*
with d* = ||u*||^2_{H^1_0} acts on v as

    L v = a(d*) v_xx + 2 a'(d*) (u*', v')_{L^2} u*_xx + lam f'(u*) v ,

assembled here in the sine basis by collocation.  The nonlocal part is a
rank-one term that vanishes at u* = 0.  Unstable manifolds are probed by
integrating from u* +/- eps v along unstable eigenvectors and classifying
the omega limit of each probe.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from . import basis, dynamics, timemap
from .equilibria import EquilibriumSet, entry_ids
from .errors import EigenConvergenceError, MorseViolationError
from .model import ProblemSpec

__all__ = [
    "LinearizationReport",
    "GraphNode",
    "GraphEdge",
    "ProbeRecord",
    "ConnectionGraph",
    "linearization_matrix",
    "spectrum",
    "linearization_report",
    "probe_connections",
    "check_morse_order",
    "graph_to_json",
    "graph_to_dot",
]

_EIG_TOL = 1e-9
_ENERGY_EDGE_MARGIN = 1e-12


@dataclass(frozen=True)
class LinearizationReport:
    equilibrium_id: str
    matrix_dim: int
    eigenvalues: np.ndarray          # real parts, sorted descending
    unstable_count: int
    classification: str              # stable | unstable | marginal
    complex_flag: bool


@dataclass(frozen=True)
class GraphNode:
    ident: str
    k: int
    sign: int
    d: float
    energy: float
    classification: str


@dataclass(frozen=True)
class ProbeRecord:
    epsilon: float
    direction_index: int
    t_hit: float


@dataclass(frozen=True)
class GraphEdge:
    src: str
    dst: str
    provenance: str                  # "required" | "observed"
    probe: Optional[ProbeRecord] = None

    @property
    def witnessed(self) -> bool:
        return self.probe is not None


@dataclass
class ConnectionGraph:
    nodes: List[GraphNode]
    edges: List[GraphEdge]
    warnings: List[str] = field(default_factory=list)

    def node(self, ident: str) -> GraphNode:
        for n in self.nodes:
            if n.ident == ident:
                return n
        raise KeyError(ident)


# ---------------------------------------------------------------------------
# linearization


def linearization_matrix(eq, spec: ProblemSpec, N: int) -> np.ndarray:
    """Dense N x N linearization at ``eq`` (an EquilibriumProfile, or None for 0)."""
    M = 4 * N
    jj = basis.eigenvalues(N)
    S = basis.basis_matrix(M, N)
    if eq is None:
        u_grid = np.zeros(M - 1)
        d_star = 0.0
        lam_t = spec.lam / float(spec.diffusion.a(0.0))
    else:
        fine = timemap.reconstruct_profile(spec.nonlinearity, eq.k, eq.lambda_tilde,
                                           eq.sign, M + 1)
        u_grid = fine.samples[1:-1, 1]
        d_star = eq.d
        lam_t = eq.lambda_tilde

    a_val = float(spec.diffusion.a(d_star))
    fprime = np.asarray(spec.nonlinearity.f_prime(u_grid), dtype=float)
    L = -a_val * np.diag(jj) + spec.lam * (S.T @ (fprime[:, None] * S)) / M

    ap = spec.diffusion.a_prime
    if ap is not None:
        a_der = float(ap(d_star))
    else:
        h = 1e-6
        a_der = (float(spec.diffusion.a(d_star + h))
                 - float(spec.diffusion.a(max(d_star - h, 0.0)))) / (d_star + h - max(d_star - h, 0.0))
    if a_der != 0.0 and eq is not None:
        coeffs = basis.project_values(u_grid, M, N)
        q1 = jj * coeffs                                            # <u*', w_j'>
        f_grid = np.asarray(spec.nonlinearity.f(u_grid), dtype=float)
        q2 = -lam_t * basis.project_values(f_grid, M, N)            # <u*'', w_i>
        L += 2.0 * a_der * np.outer(q2, q1)
    return L


def spectrum(matrix: np.ndarray) -> np.ndarray:
    """All eigenvalues of the dense matrix, sorted by descending real part."""
    matrix = np.asarray(matrix, dtype=float)
    if not np.all(np.isfinite(matrix)):
        raise ValueError("matrix entries must be finite")
    try:
        eig = np.linalg.eigvals(matrix)
    except np.linalg.LinAlgError as exc:
        raise EigenConvergenceError(str(exc)) from exc
    return eig[np.argsort(-eig.real)]


def _classify(real_parts: np.ndarray):
    unstable = int(np.sum(real_parts > _EIG_TOL))
    if np.any(np.abs(real_parts) <= _EIG_TOL):
        cls = "marginal"
    elif unstable:
        cls = "unstable"
    else:
        cls = "stable"
    return unstable, cls


def linearization_report(ident: str, matrix: np.ndarray) -> LinearizationReport:
    eig = spectrum(matrix)
    scale = np.maximum(1.0, np.abs(eig.real))
    complex_flag = bool(np.any(np.abs(eig.imag) > 1e-9 * scale))
    real_parts = eig.real
    unstable, cls = _classify(real_parts)
    return LinearizationReport(ident, matrix.shape[0], real_parts, unstable,
                               cls, complex_flag)


# ---------------------------------------------------------------------------
# unstable-manifold probing


def _unstable_directions(matrix: np.ndarray, report: LinearizationReport,
                         N: int) -> List[np.ndarray]:
    """H^1-normalized probe directions along the unstable eigenvectors.

    Falls back to raw sine-mode perturbations when the eigensolve shows
    complex pairs (the rank-one term keeps the matrix unsymmetrized).
    """
    jj = basis.eigenvalues(N)
    if report.complex_flag:
        dirs = []
        for j in range(report.unstable_count):
            v = np.zeros(N)
            v[j] = 1.0
            dirs.append(v / np.sqrt(jj @ (v * v)))
        return dirs
    vals, vecs = np.linalg.eig(matrix)
    order = np.argsort(-vals.real)
    dirs = []
    for idx in order:
        if vals[idx].real <= _EIG_TOL:
            break
        v = vecs[:, idx].real
        dirs.append(v / np.sqrt(jj @ (v * v)))
    return dirs


def probe_connections(eqs: EquilibriumSet, spec: ProblemSpec,
                      epsilon: float = 1e-4, t_end: float = 200.0,
                      N: int = 64, dt: float = 1e-4,
                      validate: bool = True) -> ConnectionGraph:
    """Assemble the connection graph by probing every unstable manifold.

    Observed edges come from classified probe omega-limits; edges 0 -> u_j
    for every enumerated branch are merged as theory-required.  With
    ``validate`` the assembled graph must satisfy every structural invariant
    or MorseViolationError (carrying the graph) is raised.
    """
    spec.require_autonomous_homogeneous("probe_connections")
    ids = entry_ids(eqs)
    coeff_by_id = {"0": np.zeros(N)}
    node_list = []
    zero_matrix = linearization_matrix(None, spec, N)
    zero_report = linearization_report("0", zero_matrix)
    node_list.append(GraphNode("0", 0, 0, 0.0,
                               dynamics.lyapunov_energy(dynamics.GalerkinState(N, np.zeros(N)), spec),
                               zero_report.classification))
    reports = {"0": (zero_report, zero_matrix)}
    for ident, entry in zip(ids, eqs.entries):
        c = basis.project_closed_samples(entry.samples, N)
        coeff_by_id[ident] = c
        matrix = linearization_matrix(entry, spec, N)
        rep = linearization_report(ident, matrix)
        reports[ident] = (rep, matrix)
        node_list.append(GraphNode(ident, entry.k, entry.sign, entry.d,
                                   dynamics.lyapunov_energy(dynamics.GalerkinState(N, c), spec),
                                   rep.classification))

    warnings_log: List[str] = []
    observed = {}
    for ident in coeff_by_id:
        rep, matrix = reports[ident]
        if rep.unstable_count < 1:
            continue
        directions = _unstable_directions(matrix, rep, N)
        if rep.complex_flag:
            warnings_log.append(f"{ident}: complex eigenvalue pair; using sine-mode probes")
        base = coeff_by_id[ident]
        for di, v in enumerate(directions):
            mask = None
            if ident == "0" and spec.nonlinearity.odd and not rep.complex_flag:
                # the unstable manifold of mode j lies on the invariant
                # lattice {j, 3j, 5j, ...}; projecting out roundoff keeps the
                # probe from being hijacked by faster-growing lower modes
                j = int(np.argmax(np.abs(v))) + 1
                mask = np.zeros(N, dtype=bool)
                mask[j - 1::2 * j] = True
            for sgn in (1.0, -1.0):
                c0 = base + sgn * epsilon * v
                traj = dynamics.integrate(dynamics.GalerkinState(N, c0), spec,
                                          t_end=t_end, dt=dt, stop_rhs_norm=1e-7,
                                          mode_mask=mask)
                res = dynamics.classify_omega_limit(traj, eqs)
                if not res.resolved:
                    warnings_log.append(
                        f"UnresolvedProbe: {ident} direction {di} sign {sgn:+.0f} "
                        f"(final distance {res.distance:.3g})")
                    continue
                if res.ident == ident:
                    warnings_log.append(
                        f"probe from {ident} direction {di} returned to its source")
                    continue
                key = (ident, res.ident)
                if key not in observed:
                    observed[key] = ProbeRecord(epsilon, di, float(traj.states[-1].time))

    edges: List[GraphEdge] = []
    required_pairs = {("0", ident) for ident in ids}
    for pair in sorted(required_pairs):
        edges.append(GraphEdge(pair[0], pair[1], "required", observed.pop(pair, None)))
    for (src, dst), probe in sorted(observed.items()):
        edges.append(GraphEdge(src, dst, "observed", probe))

    graph = ConnectionGraph(nodes=node_list, edges=edges, warnings=warnings_log)
    if validate:
        violations = check_morse_order(graph)
        if violations:
            err = MorseViolationError(violations)
            err.graph = graph
            raise err
    return graph


# ---------------------------------------------------------------------------
# structural invariants


def check_morse_order(graph: ConnectionGraph):
    """All structural invariants; returns a list of violations (empty = ok)."""
    violations = []
    by_id = {n.ident: n for n in graph.nodes}
    k_max = max((n.k for n in graph.nodes), default=0)

    def family(node: GraphNode) -> int:
        return k_max + 1 if node.ident == "0" else node.k

    adjacency = {n.ident: [] for n in graph.nodes}
    for e in graph.edges:
        if e.src not in by_id or e.dst not in by_id:
            violations.append(f"edge {e.src}->{e.dst} references an unknown node")
            continue
        adjacency[e.src].append(e.dst)
        src, dst = by_id[e.src], by_id[e.dst]
        if e.dst == "0":
            violations.append(f"edge {e.src}->0 enters the zero equilibrium")
        if (src.ident != "0" and dst.ident != "0" and src.k == dst.k
                and src.sign == -dst.sign and abs(src.d - dst.d) < 1e-9):
            violations.append(f"edge {e.src}->{e.dst} connects sign partners at equal d")
        if src.ident != "0" and dst.ident != "0" and src.k < dst.k:
            violations.append(
                f"edge {e.src}->{e.dst} increases the number of sign components")
        if not (src.energy > dst.energy + _ENERGY_EDGE_MARGIN):
            violations.append(
                f"edge {e.src}->{e.dst} does not decrease the Lyapunov energy "
                f"({src.energy!r} vs {dst.energy!r})")
        if not family(src) > family(dst):
            violations.append(
                f"edge {e.src}->{e.dst} does not descend the Morse family order")

    # acyclicity by DFS
    WHITE, GRAY, BLACK = 0, 1, 2
    color = {ident: WHITE for ident in adjacency}

    def dfs(u):
        color[u] = GRAY
        for w in adjacency[u]:
            if color.get(w) == GRAY:
                violations.append(f"cycle through {u}->{w}")
            elif color.get(w) == WHITE:
                dfs(w)
        color[u] = BLACK

    for ident in adjacency:
        if color[ident] == WHITE:
            dfs(ident)
    return violations


# ---------------------------------------------------------------------------
# serialization


def graph_to_json(graph: ConnectionGraph) -> str:
    payload = {
        "nodes": [{"id": n.ident, "k": n.k, "sign": n.sign, "d": n.d,
                   "energy": n.energy, "classification": n.classification}
                  for n in graph.nodes],
        "edges": [{"src": e.src, "dst": e.dst, "provenance": e.provenance,
                   "probe": None if e.probe is None else {
                       "epsilon": e.probe.epsilon,
                       "direction_index": e.probe.direction_index,
                       "t_hit": e.probe.t_hit}}
                  for e in graph.edges],
        "warnings": list(graph.warnings),
    }
    return json.dumps(payload, indent=2)


def graph_to_dot(graph: ConnectionGraph) -> str:
    lines = ["digraph connections {"]
    for n in graph.nodes:
        lines.append(f'  "{n.ident}" [label="{n.ident}\\nE={n.energy:.6g} ({n.classification})"];')
    for e in graph.edges:
        style = "solid" if e.provenance == "required" else "dashed"
        lines.append(f'  "{e.src}" -> "{e.dst}" [style={style}];')
    lines.append("}")
    return "\n".join(lines) + "\n"
