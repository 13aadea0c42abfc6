import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from kignn import compilers as C
from kignn import features as F
from kignn.features import AcceptancePolicy, GnnClassifier, LocalMax, Prop, Val, classify
from kignn.graphs import builtin_graph, random_keying, as_keyed
from kignn.kir import KirError, parse_expr, parse_model, write_expr, write_model
from kignn.logic import parse_formula, Logic
from kignn.scalar import Mode


def test_parse_example_classifier():
    c = parse_model('(classifier policy=">=1/<=0" mode=exact (localmax (prop 1)))')
    assert c.policy is AcceptancePolicy.ONE_ZERO and c.mode is Mode.EXACT
    assert isinstance(c.expr, LocalMax) and isinstance(c.expr.arg, Prop)
    assert c.expr.arg.index == 1


def test_sigmoid_in_exact_is_rejected():
    with pytest.raises(KirError, match="sigmoid"):
        parse_model('(classifier policy=">0/<=0" mode=exact (sigmoid (val)))')
    c = parse_model('(classifier policy=">0/<=0" mode=float (sigmoid (val)))')
    assert c.mode is Mode.FLOAT


@pytest.mark.parametrize("text, fragment", [
    ('(classifier policy=">0/<=0" mode=exact (localmax (prop 1))', "unterminated"),
    ('(classifier policy=">=1/<=0" mode=exact (affine (1 2) 0 (val)))', "coefficients"),
    ('(classifier policy=">1" mode=exact (val))', "policy"),
    ('(classifier mode=exact (val))', "policy"),
    ('(model policy=">0/<=0" mode=exact (val))', "classifier"),
    ('(classifier policy=">0/<=0" mode=exact (frobnicate (val)))', "frobnicate"),
])
def test_errors_have_positions(text, fragment):
    with pytest.raises(KirError, match=fragment) as exc:
        parse_model(text)
    assert exc.value.line == 1 and exc.value.col is not None


def test_rational_literals():
    e = parse_expr("(affine (-3/2 0.125) 1/3 (val) (prop 1))")
    g = as_keyed(builtin_graph("triangle_p"), [2, 4, 8])
    # point 0 has key 2 and no p1
    assert F.eval_feature(e, g)[0] == Fraction(-3, 2) * 2 + Fraction(1, 3)


def _compiled():
    out = [
        C.compile_gml_localsum(parse_formula("<>{>=2}(p1 & ~<>top)")),
        C.compile_ml_localmax(parse_formula("[]p1 | <>~p2")),
        C.compile_wgml_top(parse_formula("<>(p1 & <>{>=2}top)")),
        C.compile_wgml_modal(parse_formula("<>{>=2}p1")),
        C.compile_lddl_semilinear(parse_formula("<step;step>=1 p1", Logic.LDDL)),
        C.compile_isotype_localmax(builtin_graph("path(3)").pointed),
        C.compile_isotype_globalsum(builtin_graph("two_isolated").pointed),
        C.compile_unique_address([parse_formula("p1")], [parse_formula("top"),
                                                         parse_formula("p1")]),
    ]
    return out + [C.fixture_classifier(n) for n in C.FIXTURES]


@pytest.mark.parametrize("c", _compiled(), ids=lambda c: c.metadata.split(";")[0])
def test_roundtrip_compiler_outputs(c):
    text = write_model(c)
    back = parse_model(text)
    assert write_model(back) == text
    assert back.policy is c.policy and back.mode is c.mode and back.metadata == c.metadata
    g = as_keyed(builtin_graph("path(3)", prop_count=2).pointed,
                 random_keying(builtin_graph("path(3)").graph, 1))
    assert classify(back, g).output == classify(c, g).output


def test_sharing_is_preserved():
    shared = F.relu(F.add(Val(), LocalMax(Val())))
    e = F.add(shared, LocalMax(shared))
    text = write_expr(e)
    back = parse_expr(text)
    assert F.expr_size(back) == F.expr_size(e)


@given(st.integers(0, 10**6))
@settings(max_examples=60, deadline=None)
def test_random_expression_roundtrip(seed):
    rng = random.Random(seed)
    e = F.random_expression(rng, depth=4, aggregates=("localmax", "localsum", "globalsum"))
    text = write_expr(e)
    back = parse_expr(text)
    assert write_expr(back) == text
    g = as_keyed(builtin_graph("triangle_p"), random_keying(builtin_graph("triangle_p").graph, seed))
    assert F.eval_feature(back, g)[1] == F.eval_feature(e, g)[1]


def test_model_with_float_mode_roundtrip():
    c = GnnClassifier(F.sigmoid(Val()), AcceptancePolicy.POS_NEG, Mode.FLOAT, "demo")
    assert write_model(parse_model(write_model(c))) == write_model(c)
