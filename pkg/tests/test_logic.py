import random

import pytest
from hypothesis import given, settings, strategies as st

from kignn.graphs import Graph, PointedGraph, builtin_graph, enumerate_pointed_graphs
from kignn.logic import (STAY, STEP, TOP, And, BoxProg, DiamondGeq, DiamondProg, FormulaSyntaxError,
                         Logic, LogicError, Not, Or, Prop, Seq, UniqueProg, Union, WgmlClass,
                         diamond_eq, format_formula, lor, is_normal, modelcheck_gml, modelcheck_lddl,
                         normalize_lddl, parse_formula, program_relation, sample_gml, sample_lddl,
                         sample_ml, sample_wgml, sat_gml, sat_lddl, wgml_membership)
from kignn.logic import ast as L
from kignn.logic.lddl import random_lddl
from kignn.vectors import GraphBatch


def gml(text):
    return parse_formula(text, Logic.GML)


def lddl(text):
    return parse_formula(text, Logic.LDDL)


def path3_far_p():
    return PointedGraph(Graph.from_edges(3, [(0, 1), (1, 2)], [(0,), (0,), (1,)]), 0)


# ---------------------------------------------------------------- parsing

def test_parse_examples():
    assert gml("<>p1") == DiamondGeq(1, Prop(1))
    assert lddl("<step;step>=1 p1") == UniqueProg(Seq(STEP, STEP), Prop(1))
    assert gml("[]p1") == Not(DiamondGeq(1, Not(Prop(1))))
    assert gml("<>{>=2} top") == gml("<>{≥2}top") == DiamondGeq(2, TOP)
    assert gml("p1 | p2 & p1") == Or(Prop(1), And(Prop(2), Prop(1)))
    assert lddl("<step + stay;step>top") == DiamondProg(Union(STEP, Seq(STAY, STEP)), TOP)
    assert lddl("<test(p1)>top") == DiamondProg(L.Test(Prop(1)), TOP)


@pytest.mark.parametrize("text, logic", [
    ("<>{>=0} p1", Logic.GML),
    ("<>{=0} p1", Logic.GML),
    ("<>{>=2} p1", Logic.ML),
    ("p1 &", Logic.GML),
    ("p0", Logic.GML),
    ("<step>p1", Logic.GML),
    ("<step;>p1", Logic.LDDL),
    ("(p1", Logic.GML),
])
def test_parse_errors(text, logic):
    with pytest.raises(FormulaSyntaxError):
        parse_formula(text, logic)


def test_error_position():
    with pytest.raises(FormulaSyntaxError) as exc:
        gml("p1 & <>{>=0} p1")
    assert "col" in str(exc.value) or "position" in str(exc.value)


@pytest.mark.parametrize("seed", range(4))
def test_roundtrip_gml(seed):
    for phi in sample_gml(seed, 50) + sample_wgml(seed, 10, modal=True):
        assert gml(format_formula(phi)) == phi
    for phi in sample_ml(seed, 50):
        assert parse_formula(format_formula(phi), Logic.ML) == phi


@given(st.integers(0, 10**6))
@settings(max_examples=200)
def test_roundtrip_lddl(seed):
    phi = random_lddl(random.Random(seed), depth=2, props=2)
    assert lddl(format_formula(phi)) == phi


# ---------------------------------------------------------------- GML semantics

def test_gml_examples():
    edge = PointedGraph(Graph.from_edges(2, [(0, 1)], [(0,), (1,)]), 0)
    assert modelcheck_gml(edge, gml("<>p1"))
    two = gml("<>{>=2}top")
    assert not modelcheck_gml(builtin_graph("star(1)"), two)
    assert modelcheck_gml(builtin_graph("star(2)"), two)


def test_triangle_formula_holds():
    from kignn.compilers import TRIANGLE_FORMULA
    assert modelcheck_gml(builtin_graph("triangle_p"), gml(TRIANGLE_FORMULA))


def test_prop_out_of_range():
    with pytest.raises(LogicError):
        modelcheck_gml(builtin_graph("cycle(3)"), gml("p1"))


def _brute_gml(g: Graph, phi, v: int) -> bool:
    if phi == TOP:
        return True
    if isinstance(phi, Prop):
        return g.labels[v][phi.index - 1] == 1
    if isinstance(phi, Not):
        return not _brute_gml(g, phi.arg, v)
    if isinstance(phi, And):
        return _brute_gml(g, phi.left, v) and _brute_gml(g, phi.right, v)
    if isinstance(phi, Or):
        return _brute_gml(g, phi.left, v) or _brute_gml(g, phi.right, v)
    return sum(_brute_gml(g, phi.arg, w) for w in g.neighbors(v)) >= phi.grade


@pytest.mark.parametrize("seed", range(3))
def test_batch_checker_matches_recursive_definition(seed):
    formulas = sample_gml(seed, 15)
    graphs = list(enumerate_pointed_graphs(4, 2))[seed::53]
    for phi in formulas:
        for pg in graphs:
            assert modelcheck_gml(pg, phi) == _brute_gml(pg.graph, phi, pg.point)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_diamond_eq_shorthand(k):
    for phi in (TOP, Prop(1), gml("<>p1")):
        eq = diamond_eq(k, phi)
        spelled = And(DiamondGeq(k, phi), Not(DiamondGeq(k + 1, phi)))
        for n in range(1, 5):
            batch = GraphBatch.enumerate(n, 1)
            assert (sat_gml(eq, batch) == sat_gml(spelled, batch)).all()


# ---------------------------------------------------------------- LDDL semantics

def test_program_relation_examples():
    edge = builtin_graph("edge").graph
    assert program_relation(edge, STEP) == {(0, 1), (1, 0)}
    c3 = builtin_graph("cycle(3)").graph
    assert program_relation(c3, STAY) == {(v, v) for v in range(3)}
    p3 = builtin_graph("path(3)").graph
    two = program_relation(p3, Seq(STEP, STEP))
    assert two == {(0, 0), (0, 2), (1, 1), (2, 0), (2, 2)}


def test_lddl_examples():
    assert modelcheck_lddl(path3_far_p(), lddl("<step;step>=1 p1"))
    assert modelcheck_lddl(builtin_graph("cycle(3)"), lddl("<stay>top"))
    assert not modelcheck_lddl(builtin_graph("star(2)"), lddl("<step>=1 top"))
    assert modelcheck_lddl(builtin_graph("star(1)"), lddl("<step>=1 top"))


def test_unique_is_not_monotone():
    phi = lddl("<step>=1 top")
    g = builtin_graph("star(1)")
    bigger = builtin_graph("star(2)")     # star(1) plus an edge to a new leaf
    assert modelcheck_lddl(g, phi) and not modelcheck_lddl(bigger, phi)
    p = builtin_graph("path(3)").graph
    tri = builtin_graph("cycle(3)").graph
    assert tri.edges > p.edges
    end = PointedGraph(p, 0)
    assert modelcheck_lddl(end, phi) and not modelcheck_lddl(PointedGraph(tri, 0), phi)


def test_normalize_examples():
    assert normalize_lddl(lddl("[step]p1")) == Not(DiamondProg(Seq(STEP, Seq(L.Test(Not(Prop(1))),
                                                                            STAY)), TOP))
    out = normalize_lddl(lddl("<(step + stay);step>top"))
    # LDDL has no primitive disjunction; a | b is ~(~a & ~b)
    assert out == lor(DiamondProg(Seq(STEP, Seq(STEP, STAY)), TOP),
                      DiamondProg(Seq(STEP, STAY), TOP))
    fixed = lddl("<step;stay>top")
    assert normalize_lddl(fixed) == fixed


def _agree(a, b, max_nodes=4, props=1):
    for n in range(1, max_nodes + 1):
        batch = GraphBatch.enumerate(n, props)
        if not (sat_lddl(a, batch) == sat_lddl(b, batch)).all():
            return False
    return True


def test_normalize_examples_are_equivalent():
    for text in ("[step]p1", "<(step + stay);step>top", "<step;step>=1 p1",
                 "[step + test(p1)]<step>=1 ~p1"):
        phi = lddl(text)
        assert _agree(phi, normalize_lddl(phi), max_nodes=3)


@pytest.mark.parametrize("seed", range(5))
def test_normalize_preserves_truth(seed):
    for phi in sample_lddl(seed, 20):
        nf = normalize_lddl(phi)
        assert is_normal(nf)
        assert _agree(phi, nf)


def test_lddl_boxes_match_definition():
    for phi in sample_lddl(7, 20):
        if isinstance(phi, BoxProg):
            assert _agree(phi, Not(DiamondProg(phi.program, Not(phi.arg))))


# ---------------------------------------------------------------- WGML

def test_wgml_membership_examples():
    assert wgml_membership(gml("<>{>=2}top")).kind is WgmlClass.IN_WGML_TOP
    m = wgml_membership(gml("<>{>=2}p1"))
    assert m.kind is WgmlClass.IN_WGML_MODAL and not m.in_top
    neg = gml("~<>{>=2}top")
    m = wgml_membership(neg)
    assert m.kind is WgmlClass.NOT_WGML and m.witness == neg
    assert wgml_membership(gml("<>(p1 & <>{>=2}top) | []p1")).in_top
    assert not wgml_membership(gml("<>{>=2}<>{>=2}top")).in_modal
    assert not wgml_membership(gml("<>{>=3}top")).in_modal


def test_wgml_samples_are_members():
    for phi in sample_wgml(0, 50, modal=False):
        assert wgml_membership(phi).in_top
    for phi in sample_wgml(0, 50, modal=True):
        assert wgml_membership(phi).in_modal


def test_wgml_top_inside_modal():
    for phi in sample_gml(3, 200):
        m = wgml_membership(phi)
        if m.in_top:
            assert m.in_modal
