import itertools
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kignn import features as F
from kignn.features import (AcceptancePolicy, FeatureError, GnnClassifier, LocalMax, LocalSum,
                            GlobalSum, Prop, Val, aggregation_depth, check_policy_conformance,
                            classify, eval_feature, evaluate_batch, evaluate_layered, layerize,
                            random_expression)
from kignn.graphs import (Graph, PointedGraph, as_keyed, builtin_graph, enumerate_pointed_graphs,
                          random_keying, restrict_neighborhood)
from kignn.scalar import Mode
from kignn.vectors import GraphBatch, QArray


def fractions(a):
    return a.to_fractions() if isinstance(a, QArray) else np.asarray(a)


def key_spread():
    v = Val()
    return F.fabs(F.sub(LocalMax(v), F.local_min(v)))


def star2_keyed():
    return as_keyed(builtin_graph("star(2)"), [0, 1, 3])


# ---------------------------------------------------------------- evaluation

def test_localmax_prop_example():
    g = PointedGraph(Graph.from_edges(2, [(0, 1)], [(0,), (1,)]), 0)
    value, per_node = eval_feature(LocalMax(Prop(1)), g)
    assert value == 1 and per_node == [1, 0]


def test_empty_max_is_zero():
    g = as_keyed(builtin_graph("single_node"), [5])
    assert eval_feature(LocalMax(Val()), g)[0] == 0
    assert eval_feature(LocalSum(Val()), g)[0] == 0
    assert eval_feature(GlobalSum(Val()), g)[0] == 5


def test_key_spread_value():
    assert eval_feature(key_spread(), star2_keyed())[0] == 2


def test_val_needs_keying():
    with pytest.raises(FeatureError, match="keying"):
        eval_feature(Val(), builtin_graph("edge"))


def test_prop_out_of_range():
    with pytest.raises(FeatureError, match="prop"):
        eval_feature(Prop(2), builtin_graph("triangle_p"))


def test_sigmoid_forbidden_in_exact():
    with pytest.raises(FeatureError):
        GnnClassifier(F.sigmoid(Val()), mode=Mode.EXACT)
    with pytest.raises(FeatureError):
        evaluate_batch(F.sigmoid(Val()), GraphBatch.enumerate(1, 0).with_keyings(1, 0))


def test_classify_examples():
    one = GnnClassifier(F.const(1))
    zero = GnnClassifier(F.const(0))
    g = builtin_graph("cycle(3)")
    d = classify(one, g)
    assert d.accept and d.output == 1
    assert not classify(zero, g).accept
    c = GnnClassifier(key_spread())
    assert classify(c, star2_keyed()).accept
    d = classify(c, as_keyed(builtin_graph("star(1)"), [0, 7]))
    assert not d.accept and d.output == 0


def test_float_threshold():
    c = GnnClassifier(F.const(Fraction(1, 10**10)), mode=Mode.FLOAT)
    assert not classify(c, builtin_graph("single_node")).accept
    c = GnnClassifier(F.const(Fraction(1, 10**8)), mode=Mode.FLOAT)
    assert classify(c, builtin_graph("single_node")).accept


def test_aggregation_depth():
    v = Val()
    assert aggregation_depth(Prop(1)) == 0
    assert aggregation_depth(LocalMax(LocalSum(v))) == 2
    assert aggregation_depth(F.add(LocalMax(v), LocalSum(LocalSum(v)))) == 2


# ---------------------------------------------------------------- policies

def test_policy_conformance_examples():
    graphs = list(enumerate_pointed_graphs(3, 1))
    half = GnnClassifier(F.const(Fraction(1, 2)), AcceptancePolicy.ONE_ZERO)
    r = check_policy_conformance(half, graphs, 0)
    assert len(r.violations) == len(graphs) == r.instances

    keyed = as_keyed(builtin_graph("edge"), [0, 1])
    val = GnnClassifier(Val(), AcceptancePolicy.POS_NEG)
    assert F.violates(val.policy, classify(val, keyed).output, val.mode)

    ind = GnnClassifier(LocalMax(Prop(1)), AcceptancePolicy.ONE_ZERO)
    assert check_policy_conformance(ind, list(enumerate_pointed_graphs(4, 1)), 0).ok


def test_pos_neg_flags_zero_outputs():
    c = GnnClassifier(F.sub(Val(), LocalMax(Val())), AcceptancePolicy.POS_NEG)
    r = check_policy_conformance(c, [builtin_graph("single_node")], 5, seed=3)
    assert r.ok          # keys are never 0 at these seeds
    c = GnnClassifier(LocalSum(Val()), AcceptancePolicy.POS_NEG)
    r = check_policy_conformance(c, [builtin_graph("single_node")], 3)
    assert len(r.violations) == 3


# ---------------------------------------------------------------- layers

def test_layerize_examples():
    assert len(layerize(LocalMax(Prop(1))).stages) == 1
    assert len(layerize(F.affine([2], [Prop(1)], 1)).stages) == 0
    m = layerize(key_spread())
    assert len(m.stages) == 1 and m.stages[0].kind == "localmax"
    with pytest.raises(FeatureError, match="single aggregation"):
        layerize(F.add(LocalMax(Val()), LocalSum(Val())))


def _layer_check(expr, max_nodes=4, props=1, keyings=3, seed=0):
    for n in range(1, max_nodes + 1):
        batch = GraphBatch.enumerate(n, props).with_keyings(keyings, seed)
        direct = fractions(evaluate_batch(expr, batch))
        staged = fractions(evaluate_layered(layerize(expr), batch))
        assert (direct == staged).all()


def test_layerize_key_spread_all_graphs():
    _layer_check(key_spread())


@given(st.integers(0, 10**6), st.sampled_from(["localmax", "sum"]))
@settings(max_examples=40, deadline=None)
def test_layerize_equivalence(seed, kind):
    aggs = ("localmax",) if kind == "localmax" else ("localsum", "globalsum")
    expr = random_expression(random.Random(seed), depth=4, aggregates=aggs)
    _layer_check(expr, max_nodes=3, keyings=2, seed=seed)


# ---------------------------------------------------------------- invariants

def _permute(batch: GraphBatch, perm) -> GraphBatch:
    inv = np.argsort(perm)
    adj = batch.adj[:, inv][:, :, inv]
    labels = batch.labels[:, inv]
    keys = batch.keys.take((slice(None), inv))
    return GraphBatch(adj, labels, keys)


@pytest.mark.parametrize("seed", range(20))
def test_isomorphism_invariance(seed):
    rng = random.Random(seed)
    expr = random_expression(rng, depth=3, aggregates=("localmax", "localsum", "globalsum"))
    for n in (3, 4):
        batch = GraphBatch.enumerate(n, 1).with_keyings(3, seed)
        perm = list(range(n))
        rng.shuffle(perm)
        base = fractions(evaluate_batch(expr, batch))
        moved = fractions(evaluate_batch(expr, _permute(batch, perm)))
        assert (moved[:, perm] == base).all()


LOCALITY_SAMPLE = list(enumerate_pointed_graphs(4, 1))[::7] + \
    list(itertools.islice(enumerate_pointed_graphs(5, 1, min_nodes=5), 0, None, 1499))


@given(st.integers(0, 10**6))
@settings(max_examples=40, deadline=None)
def test_locality(seed):
    rng = random.Random(seed)
    expr = random_expression(rng, depth=3)
    d = aggregation_depth(expr)
    for pg in LOCALITY_SAMPLE[seed % 5::5]:
        g = as_keyed(pg, random_keying(pg.graph, seed))
        assert eval_feature(expr, g)[0] == eval_feature(expr, restrict_neighborhood(g, d))[0]


@pytest.mark.parametrize("seed", range(10))
def test_key_oblivious_expressions_ignore_keys(seed):
    expr = random_expression(random.Random(seed), depth=4, use_val=False,
                             aggregates=("localmax", "localsum", "globalsum"))
    for n in (2, 3, 4):
        batch = GraphBatch.enumerate(n, 1).with_keyings(10, seed)
        vals = fractions(evaluate_batch(expr, batch)).reshape(-1, 10, n)
        assert (vals == vals[:, :1]).all()
