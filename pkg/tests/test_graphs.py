from fractions import Fraction

import networkx as nx
import pytest
from hypothesis import given
from hypothesis import strategies as st

from quasiforce.graphs import (
    ExpansionTooLarge,
    Graph,
    GraphError,
    ParallelRootEdge,
    QuantumGraph,
    QuantumRootedGraph,
    RootedGraph,
    RootMismatch,
    canonical_form,
    complete_graph,
    cycle_graph,
    expand_quantum_product,
    format_fraction,
    is_isomorphic,
    named_graph,
    parse_fraction,
    path_graph,
    product,
    star_graph,
    unlabel,
)


@st.composite
def graphs(draw, max_n=7):
    n = draw(st.integers(0, max_n))
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True)) if pairs else []
    return Graph(n, frozenset(chosen))


def _nx(g):
    h = nx.Graph()
    h.add_nodes_from(range(g.n))
    h.add_edges_from(g.edges)
    return h


def test_named_graphs():
    assert named_graph("k4").m == 6
    assert named_graph("C5") == cycle_graph(5)
    assert named_graph("p3") == path_graph(3)
    assert star_graph(3).degrees() == [3, 1, 1, 1]
    for bad in ("x3", "c2", "k", "kk"):
        with pytest.raises(GraphError):
            named_graph(bad)


def test_invalid_graphs():
    with pytest.raises(GraphError):
        Graph(2, frozenset({(0, 0)}))
    with pytest.raises(GraphError):
        Graph(2, frozenset({(0, 2)}))
    with pytest.raises(GraphError):
        Graph.from_edges(2, [(0, 1), (1, 0)])
    with pytest.raises(GraphError):
        complete_graph(3).add_edges([(0, 1)])


def test_edgelist_errors():
    with pytest.raises(GraphError):
        Graph.from_edgelist("3 2\n0 1\n")
    with pytest.raises(GraphError):
        Graph.from_edgelist("0 1\n")


@given(graphs())
def test_edgelist_and_graph6_round_trip(g):
    assert Graph.from_edgelist(g.to_edgelist()) == g
    if g.n:
        assert Graph.from_graph6(g.to_graph6()) == g


@given(graphs(), st.randoms(use_true_random=False))
def test_canonical_form_is_relabel_invariant(g, rnd):
    perm = list(range(g.n))
    rnd.shuffle(perm)
    assert canonical_form(g) == canonical_form(g.relabel(perm))


@given(graphs(6), graphs(6))
def test_canonical_form_agrees_with_networkx(g, h):
    assert (canonical_form(g) == canonical_form(h)) == nx.is_isomorphic(_nx(g), _nx(h))


def test_isomorphism_examples():
    assert is_isomorphic(cycle_graph(4), Graph(4, frozenset({(0, 2), (2, 1), (1, 3), (3, 0)})))
    assert not is_isomorphic(cycle_graph(6), complete_graph(3).disjoint_union(complete_graph(3)))


@given(graphs())
def test_components_partition_vertices(g):
    comps = g.components()
    assert sorted(v for c in comps for v in c) == list(range(g.n))
    expected = nx.number_connected_components(_nx(g)) if g.n else 0
    assert len(comps) == expected


def test_rooted_product_glues_roots():
    h = RootedGraph(Graph(3, frozenset({(0, 2)})), (2,))
    h2 = RootedGraph(Graph(3, frozenset({(1, 2)})), (2,))
    p = product(h, h2)
    assert p.n == 4 and p.graph.edges == {(0, 2), (1, 3)}
    assert (h * h2).graph == p.graph


def test_rooted_product_errors():
    a = RootedGraph(Graph(2, frozenset({(0, 1)})), (2,))
    with pytest.raises(ParallelRootEdge):
        product(a, a)
    with pytest.raises(RootMismatch):
        product(a, RootedGraph(Graph(2), (1, 1)))
    with pytest.raises(GraphError):
        RootedGraph(Graph(1), (2,))
    with pytest.raises(GraphError):
        RootedGraph(Graph(3), (2,)).add_root_edges([(0, 2)])


def test_quantum_product_expands_and_merges():
    k2 = RootedGraph(Graph(2, frozenset({(0, 1)})), (1,))
    k1 = RootedGraph(Graph(1), (1,))
    f = QuantumRootedGraph([(1, k2), (-Fraction(1, 2), k1)])
    sq = expand_quantum_product([f, f])
    assert len(sq) == 4
    merged = unlabel(sq, merge=True)
    coeffs = sorted(c for c, _ in merged)
    assert coeffs == [Fraction(-1), Fraction(1, 4), Fraction(1)]
    with pytest.raises(ExpansionTooLarge):
        expand_quantum_product([f] * 5, expansion_limit=16)
    with pytest.raises(GraphError):
        expand_quantum_product([])


def test_quantum_graph_json_and_cancellation():
    qg = QuantumGraph([(Fraction(2, 3), cycle_graph(4)), (-1, path_graph(3))])
    back = QuantumGraph.from_json(qg.to_json())
    assert [(c, g) for c, g in back] == [(c, g) for c, g in qg]
    relabeled = cycle_graph(4).relabel([1, 0, 2, 3])
    assert len((qg - QuantumGraph([(Fraction(2, 3), relabeled)])).merged()) == 1


def test_fraction_helpers():
    assert format_fraction(Fraction(-3, 6)) == "-1/2"
    assert parse_fraction("7/14") == Fraction(1, 2)
    with pytest.raises(GraphError):
        parse_fraction(0.5)
