import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from kignn.graphs import (Graph, GraphError, PointedGraph, as_keyed, builtin_graph, distances,
                          enumerate_pointed_graphs, is_isomorphic, parse_graph, random_keying,
                          restrict_neighborhood, unravel, write_graph)


@st.composite
def graphs(draw, max_nodes=5, max_props=2):
    n = draw(st.integers(1, max_nodes))
    P = draw(st.integers(0, max_props))
    pairs = list(itertools.combinations(range(n), 2))
    edges = draw(st.sets(st.sampled_from(pairs))) if pairs else set()
    labels = tuple(tuple(draw(st.integers(0, 1)) for _ in range(P)) for _ in range(n))
    point = draw(st.integers(0, n - 1))
    return PointedGraph(Graph(n, P, frozenset(edges), labels), point)


def _is_tree(g: Graph) -> bool:
    return len(g.edges) == g.node_count - 1 and g.is_connected()


# ---------------------------------------------------------------- .pg format

def test_parse_edge_graph():
    g = parse_graph("nodes 2\nprops 1\nedge 0 1\nlabel 1 1\npoint 0")
    assert g.graph.edges == {(0, 1)}
    assert g.graph.labels == ((0,), (1,))
    assert g.point == 0 and g.keying is None


def test_parse_single_node():
    g = parse_graph("nodes 1\nprops 0\npoint 0")
    assert g.node_count == 1 and not g.graph.edges


@pytest.mark.parametrize("text, line", [
    ("nodes 2\nprops 0\nedge 0 0\npoint 0", 3),
    ("nodes 2\nprops 0\nedge 0 1\nedge 1 0\npoint 0", 4),
    ("nodes 2\nprops 0\nedge 0 2\npoint 0", 3),
    ("nodes 2\nprops 0\npoint 0\nkey 0 1\nkey 1 1", 5),
])
def test_parse_errors_carry_line(text, line):
    with pytest.raises(GraphError) as exc:
        parse_graph(text)
    assert exc.value.line == line
    assert f"line {line}" in str(exc.value)


def test_parse_missing_point():
    with pytest.raises(GraphError, match="point"):
        parse_graph("nodes 1\nprops 0")


def test_keys_are_all_or_none():
    with pytest.raises(GraphError):
        parse_graph("nodes 2\nprops 0\npoint 0\nkey 0 1")


def test_decimal_keys_are_exact():
    g = parse_graph("nodes 2\nprops 0\npoint 1\nkey 0 0.125\nkey 1 -3/4")
    assert g.keying.values == (Fraction(1, 8), Fraction(-3, 4))
    text = write_graph(g)
    assert "key 0 1/8" in text and "key 1 -3/4" in text


def test_write_single_node():
    assert write_graph(builtin_graph("single_node")).strip() == "nodes 1\nprops 0\npoint 0"


def test_write_rational_keys_verbatim():
    g = as_keyed(builtin_graph("edge"), [Fraction(1, 2), Fraction(3, 4)])
    text = write_graph(g)
    assert "key 0 1/2" in text and "key 1 3/4" in text


@given(graphs(), st.integers(0, 2**16))
def test_write_parse_roundtrip(pg, seed):
    g = as_keyed(pg, random_keying(pg.graph, seed))
    assert parse_graph(write_graph(g)) == g
    assert parse_graph(write_graph(as_keyed(pg))) == as_keyed(pg)


@pytest.mark.parametrize("name", ["cycle(3)", "cycle(6)", "path(3)", "star(0)", "star(2)",
                                  "complete(4)", "single_node", "edge", "triangle_p",
                                  "two_isolated"])
def test_fixture_roundtrip(name):
    g = builtin_graph(name)
    assert parse_graph(write_graph(g)) == g


# ---------------------------------------------------------------- fixtures

def test_builtin_fixtures():
    c3 = builtin_graph("cycle(3)")
    assert c3.node_count == 3 and len(c3.graph.edges) == 3 and c3.graph.prop_count == 0
    tp = builtin_graph("triangle_p")
    assert tp.graph.labels == ((0,), (1,), (0,)) and tp.point == 0 and len(tp.graph.edges) == 3
    s2 = builtin_graph("star", [2])
    assert s2.point == 0 and s2.graph.degree(0) == 2


@pytest.mark.parametrize("name", ["cycle(2)", "wheel(4)", "cycle"])
def test_builtin_errors(name):
    with pytest.raises(GraphError):
        builtin_graph(name)


# ---------------------------------------------------------------- enumeration

def test_enumeration_counts():
    assert sum(1 for _ in enumerate_pointed_graphs(1, 0)) == 1
    # exactly 2 nodes: 2 edge sets x 2 points
    assert sum(1 for _ in enumerate_pointed_graphs(2, 0, min_nodes=2)) == 4
    assert sum(1 for _ in enumerate_pointed_graphs(2, 0)) == 5
    assert sum(1 for _ in enumerate_pointed_graphs(3, 1, min_nodes=3)) == 8 * 8 * 3
    assert sum(1 for _ in enumerate_pointed_graphs(3, 1)) == 2 + 16 + 192


def test_enumeration_is_distinct_and_valid():
    seen = set()
    for pg in enumerate_pointed_graphs(4, 1):
        g = pg.graph
        assert all(u < v for u, v in g.edges)
        assert all(len(lab) == 1 for lab in g.labels)
        seen.add(pg)
    assert len(seen) == 2 + 16 + 192 + 64 * 16 * 4


def test_connected_filter():
    for pg in enumerate_pointed_graphs(4, 0, connected_only=True):
        assert pg.graph.is_connected()
    assert sum(1 for _ in enumerate_pointed_graphs(3, 0, True, min_nodes=3)) == 4 * 3


def test_enumeration_bound():
    with pytest.raises(GraphError):
        list(enumerate_pointed_graphs(7, 0))
    with pytest.raises(GraphError):
        list(enumerate_pointed_graphs(2, 3))


# ---------------------------------------------------------------- neighborhoods

def test_restrict_examples():
    p3 = PointedGraph(builtin_graph("path(3)").graph, 0)
    r = restrict_neighborhood(p3, 1)
    assert r.node_count == 2 and r.graph.edges == {(0, 1)}
    c6 = restrict_neighborhood(builtin_graph("cycle(6)"), 2)
    assert c6.node_count == 5 and len(c6.graph.edges) == 4
    assert is_isomorphic(c6, PointedGraph(builtin_graph("path(5)").graph, 2))


@given(graphs(max_nodes=6), st.integers(0, 6))
def test_restrict_matches_bfs(pg, r):
    d = distances(pg.graph, pg.point)
    ball = [v for v in range(pg.node_count) if 0 <= d[v] <= r]
    sub = restrict_neighborhood(pg, r)
    assert sub.node_count == len(ball)
    assert sorted(sub.graph.labels) == sorted(pg.graph.labels[v] for v in ball)
    inner = sum(1 for u, v in pg.graph.edges if u in ball and v in ball)
    assert len(sub.graph.edges) == inner
    assert sub.point == 0


@given(graphs(max_nodes=5))
def test_restrict_saturates_to_component(pg):
    from kignn.graphs import component_of
    assert is_isomorphic(restrict_neighborhood(pg, pg.node_count), component_of(pg))


def test_unravel_examples():
    c3 = builtin_graph("cycle(3)")
    assert unravel(c3, 0).node_count == 1
    assert unravel(c3, 2).node_count == 7
    e = unravel(builtin_graph("edge"), 3)
    assert e.node_count == 4
    assert is_isomorphic(e, PointedGraph(builtin_graph("path(4)").graph, 0))


@given(graphs(max_nodes=4), st.integers(0, 3))
@settings(max_examples=60)
def test_unravel_is_tree(pg, depth):
    u = unravel(pg, depth)
    assert _is_tree(u.graph)
    assert u.graph.labels[u.point] == pg.graph.labels[pg.point]


# ---------------------------------------------------------------- keys

def test_random_keying():
    c3 = builtin_graph("cycle(3)").graph
    assert random_keying(c3, 1) == random_keying(c3, 1)
    assert random_keying(c3, 1) != random_keying(c3, 2)


@given(st.integers(1, 40), st.integers(0, 2**20))
def test_random_keying_injective_and_scaled(n, seed):
    k = random_keying(Graph(n, 0), seed)
    assert len(set(k.values)) == n
    assert all(abs(q) <= 1000 and (q * 1000).denominator == 1 for q in k.values)


# ---------------------------------------------------------------- isomorphism

def test_isomorphism_examples():
    c3 = builtin_graph("cycle(3)")
    w = is_isomorphic(c3, c3)
    assert w is not None and w[0] == 0
    assert is_isomorphic(c3, builtin_graph("cycle(4)")) is None
    assert is_isomorphic(c3, PointedGraph(c3.graph, 1)) is not None


def _check_witness(g, h, w):
    assert w[g.point] == h.point
    assert sorted(w.values()) == list(range(h.node_count))
    for u in range(g.node_count):
        assert g.graph.labels[u] == h.graph.labels[w[u]]
        for v in range(g.node_count):
            assert g.graph.has_edge(u, v) == h.graph.has_edge(w[u], w[v]) if u != v else True


def test_isomorphism_symmetric_small():
    pts = list(enumerate_pointed_graphs(3, 1)) + list(enumerate_pointed_graphs(4, 0, min_nodes=4))
    for g, h in itertools.product(pts[::3], pts[::5]):
        a, b = is_isomorphic(g, h), is_isomorphic(h, g)
        assert (a is None) == (b is None)
        if a is not None:
            _check_witness(g, h, a)


@given(graphs(max_nodes=6), st.randoms())
def test_isomorphism_under_relabeling(pg, rnd):
    n = pg.node_count
    perm = list(range(n))
    rnd.shuffle(perm)
    g = pg.graph
    labels = [None] * n
    for v in range(n):
        labels[perm[v]] = g.labels[v]
    h = PointedGraph(Graph(n, g.prop_count, frozenset((perm[u], perm[v]) for u, v in g.edges),
                           tuple(labels)), perm[pg.point])
    w = is_isomorphic(pg, h)
    assert w is not None
    _check_witness(pg, h, w)
