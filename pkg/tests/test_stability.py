import json

import numpy as np
import pytest

from nlchafee import basis, equilibria as eq, stability as st
from nlchafee.errors import MorseViolationError
from nlchafee.model import ProblemSpec, affine_diffusion, constant_diffusion
from nlchafee.stability import ConnectionGraph, GraphEdge, GraphNode

PI2 = np.pi * np.pi


@pytest.fixture(scope="module")
def eqset50(spec50_affine):
    return eq.enumerate_equilibria(spec50_affine)


@pytest.fixture(scope="module")
def graph50(eqset50, spec50_affine):
    return st.probe_connections(eqset50, spec50_affine)


# ---------------------------------------------------------------------------
# linearization matrix


def test_linearization_at_zero_is_diagonal(spec50_affine):
    L = st.linearization_matrix(None, spec50_affine, 16)
    jj = basis.eigenvalues(16)
    expected = np.diag(50.0 - jj)
    assert np.max(np.abs(L - expected)) < 1e-10


def test_constant_a_reduces_to_sturm_liouville(cubic):
    # a' = 0 kills the nonlocal rank-one term: matrix equals the classical
    # frozen-coefficient linearization and is symmetric
    spec = ProblemSpec(50.0, cubic, constant_diffusion(1.0))
    eqset = eq.enumerate_equilibria(spec)
    L = st.linearization_matrix(eqset.entries[0], spec, 32)
    assert np.max(np.abs(L - L.T)) < 1e-10


def test_unstable_counts_at_zero(cubic):
    for lam in (5.0, 20.0, 50.0, 95.0):
        spec = ProblemSpec(lam, cubic, constant_diffusion(1.0))
        rep = st.linearization_report("0", st.linearization_matrix(None, spec, 64))
        expected = sum(1 for j in range(1, 65) if lam > j * j * PI2)
        assert rep.unstable_count == expected


def test_u1_stable_at_lambda20(spec20_affine):
    eqset = eq.enumerate_equilibria(spec20_affine)
    for entry in eqset.entries:
        rep = st.linearization_report("u1", st.linearization_matrix(entry, spec20_affine, 64))
        assert rep.classification == "stable"
        assert np.all(rep.eigenvalues < -1e-6)


def test_u2_unstable_at_lambda50(eqset50, spec50_affine):
    for ident, entry in zip(eq.entry_ids(eqset50), eqset50.entries):
        rep = st.linearization_report(ident, st.linearization_matrix(entry, spec50_affine, 64))
        if entry.k == 2:
            assert rep.classification == "unstable"
            assert rep.unstable_count >= 1
        else:
            assert rep.classification == "stable"


def test_classical_morse_index_constant_a(cubic):
    # for a = 1 the classical expectation is index k - 1 (reported for a = 1
    # only; the nonlocal problem makes no such claim)
    spec = ProblemSpec(95.0, cubic, constant_diffusion(1.0))
    eqset = eq.enumerate_equilibria(spec)
    for entry in eqset.entries:
        rep = st.linearization_report("x", st.linearization_matrix(entry, spec, 64))
        assert rep.unstable_count == entry.k - 1


# ---------------------------------------------------------------------------
# spectrum


def test_spectrum_diagonal():
    eigs = st.spectrum(np.diag([3.0, -1.0, 2.0]))
    assert eigs.real == pytest.approx([3.0, 2.0, -1.0])


def test_spectrum_symmetric_2x2():
    eigs = st.spectrum(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert eigs.real == pytest.approx([1.0, -1.0], abs=1e-12)


def test_spectrum_against_characteristic_polynomial():
    rng = np.random.default_rng(3)
    for n in (2, 3, 4):
        A = rng.standard_normal((n, n))
        A = A + A.T
        eigs = np.sort(st.spectrum(A).real)
        # characteristic-polynomial root counting for N <= 4
        roots = np.sort(np.roots(np.poly(A)).real)
        assert eigs == pytest.approx(roots, abs=1e-8)


def test_spectrum_rejects_nonfinite():
    with pytest.raises(ValueError):
        st.spectrum(np.array([[np.nan, 0.0], [0.0, 1.0]]))


# ---------------------------------------------------------------------------
# connection graph


def test_graph_nodes_and_energies(graph50):
    ids = {n.ident for n in graph50.nodes}
    assert ids == {"0", "u1+", "u1-", "u2+", "u2-"}
    zero = graph50.node("0")
    assert zero.energy == 0.0
    for n in graph50.nodes:
        if n.ident != "0":
            assert n.energy < 0.0          # E(0) = 0 > E(u_j)


def test_required_edges_witnessed(graph50):
    required = {(e.src, e.dst) for e in graph50.edges if e.provenance == "required"}
    assert required == {("0", "u1+"), ("0", "u1-"), ("0", "u2+"), ("0", "u2-")}
    for e in graph50.edges:
        if e.provenance == "required":
            assert e.witnessed


def test_observed_edges_obey_morse_order(graph50):
    observed = {(e.src, e.dst) for e in graph50.edges if e.provenance == "observed"}
    assert observed <= {("u2+", "u1+"), ("u2+", "u1-"), ("u2-", "u1+"), ("u2-", "u1-")}
    assert st.check_morse_order(graph50) == []


def test_edges_decrease_energy(graph50):
    by_id = {n.ident: n for n in graph50.nodes}
    for e in graph50.edges:
        assert by_id[e.src].energy > by_id[e.dst].energy + 1e-12


def test_trivial_graph_below_first_threshold(cubic):
    spec = ProblemSpec(5.0, cubic, affine_diffusion(1.0, 1.0))
    graph = st.probe_connections(eq.enumerate_equilibria(spec), spec)
    assert [n.ident for n in graph.nodes] == ["0"]
    assert graph.edges == []


# ---------------------------------------------------------------------------
# forbidden edges (synthetic)


def _nodes():
    return [GraphNode("0", 0, 0, 0.0, 0.0, "unstable"),
            GraphNode("u1+", 1, 1, 2.3, -2.3, "stable"),
            GraphNode("u1-", 1, -1, 2.3, -2.3, "stable"),
            GraphNode("u2+", 2, 1, 0.25, -0.1, "unstable")]


def test_violation_lap_increase():
    graph = ConnectionGraph(_nodes(), [GraphEdge("u1+", "u2+", "observed")])
    violations = st.check_morse_order(graph)
    assert any("sign components" in v for v in violations)


def test_violation_sign_partners():
    graph = ConnectionGraph(_nodes(), [GraphEdge("u1+", "u1-", "observed")])
    violations = st.check_morse_order(graph)
    assert any("sign partners" in v for v in violations)


def test_violation_edge_into_zero():
    graph = ConnectionGraph(_nodes(), [GraphEdge("u1+", "0", "observed")])
    violations = st.check_morse_order(graph)
    assert any("zero equilibrium" in v for v in violations)


def test_violation_cycle():
    graph = ConnectionGraph(_nodes(), [GraphEdge("u2+", "u1+", "observed"),
                                       GraphEdge("u1+", "u2+", "observed")])
    violations = st.check_morse_order(graph)
    assert any("cycle" in v for v in violations)


def test_probe_connections_raises_on_violation(eqset50, spec50_affine, monkeypatch):
    def bad_check(graph):
        return ["synthetic violation"]
    monkeypatch.setattr(st, "check_morse_order", bad_check)
    with pytest.raises(MorseViolationError) as err:
        st.probe_connections(eqset50, spec50_affine)
    assert err.value.violations == ["synthetic violation"]
    assert err.value.graph is not None


# ---------------------------------------------------------------------------
# serialization


def test_graph_json_schema(graph50):
    payload = json.loads(st.graph_to_json(graph50))
    assert set(payload) == {"nodes", "edges", "warnings"}
    node = payload["nodes"][0]
    assert set(node) == {"id", "k", "sign", "d", "energy", "classification"}
    edge = payload["edges"][0]
    assert set(edge) == {"src", "dst", "provenance", "probe"}
    witnessed = [e for e in payload["edges"] if e["probe"] is not None]
    assert witnessed
    assert set(witnessed[0]["probe"]) == {"epsilon", "direction_index", "t_hit"}


def test_graph_dot_output(graph50):
    text = st.graph_to_dot(graph50)
    assert text.startswith("digraph")
    assert '"0" -> "u1+"' in text
    assert text.rstrip().endswith("}")
