"""Acceptance suite: one test per numbered criterion.

Run with `pytest tests/test_acceptance.py`; the terminal summary lists one
PASS/FAIL line per criterion (see conftest.py).
"""

import functools
import itertools
import random

import numpy as np
import pytest

from kignn import compilers as C
from kignn import features as F
from kignn import workbench as wb
from kignn.equivalence import (FULL, bisimilar, cr_equivalent, double_cycle_cover, find_covering,
                               verify_bisimulation, verify_covering)
from kignn.features import AcceptancePolicy, GnnClassifier, Val, decide_batch, evaluate_batch
from kignn.graphs import (as_keyed, as_pointed, builtin_graph, enumerate_pointed_graphs,
                          is_isomorphic, random_keying, unravel)
from kignn.logic import sample_lddl
from kignn.scalar import Mode
from kignn.vectors import GraphBatch, QArray

T = C.CompileTarget
SEED = 0


@functools.lru_cache(maxsize=None)
def oracle(target: T) -> wb.OracleReport:
    return wb.oracle_agreement(target, wb.default_corpus(target), seed=SEED)


def _outputs_are_zero_one(report: wb.OracleReport, props: int, max_nodes: int = 4) -> bool:
    for n in range(1, max_nodes + 1):
        batch = GraphBatch.enumerate(n, props)
        for c in report.classifiers:
            vals = evaluate_batch(c.expr, batch, Mode.EXACT)
            assert isinstance(vals, QArray)
            # normalized fractions: 0 and 1 are exactly num in {0, 1} over den 1
            if not ((vals.dens() == 1) & ((vals.num == 0) | (vals.num == 1))).all():
                return False
    return True


@pytest.mark.criterion(1, "GML compiler: 200 formulas x all pointed graphs <= 4 nodes, 2 props")
def test_criterion_01_gml():
    r = oracle(T.GML_LOCALSUM_RELU)
    print(r.text())
    assert r.sources == 200 and r.passed
    assert _outputs_are_zero_one(r, 2)
    assert r.wall_time < 300


@pytest.mark.criterion(2, "ML compiler: 200 formulas x all pointed graphs <= 4 nodes, 2 props")
def test_criterion_02_ml():
    r = oracle(T.ML_LOCALMAX_RELU)
    print(r.text())
    assert r.sources == 200 and r.passed
    assert _outputs_are_zero_one(r, 2)


@pytest.mark.criterion(3, "WGML(top) compiler: 100 formulas x connected graphs <= 4 x 10 keyings")
def test_criterion_03_wgml_top():
    r = oracle(T.WGML_TOP_LOCALMAX_RELU)
    print(r.text())
    assert r.sources == 100 and r.passed
    assert all(c.mode is Mode.EXACT for c in r.classifiers)


@pytest.mark.criterion(4, "WGML(modal) compiler, float mode, accept outputs > 1e-6")
def test_criterion_04_wgml_modal():
    r = oracle(T.WGML_MODAL_LOCALMAX_SIGMOID)
    print(r.text())
    assert r.sources == 100 and r.passed
    assert all(c.mode is Mode.FLOAT for c in r.classifiers)
    assert r.min_accept_output is not None and r.min_accept_output > wb.MARGIN


@pytest.mark.criterion(5, "LDDL compiler: 100 formulas x connected graphs <= 4 x 10 keyings")
def test_criterion_05_lddl():
    r = oracle(T.LDDL_LOCALMAX_SEMILINEAR)
    print(r.text())
    assert r.sources == 100 and r.passed
    assert r.wall_time < 600


@pytest.mark.criterion(6, "LDDL normalization preserves truth on the same corpus")
def test_criterion_06_normalization():
    forms = sample_lddl(SEED, 100, props=1)
    assert wb.normalization_disagreements(forms, max_nodes=4, props=1) == []


@pytest.mark.criterion(7, "isomorphism-type compilers (localmax, localsum+square, globalsum)")
def test_criterion_07_isotype():
    for target in (T.ISOTYPE_LOCALMAX_SEMILINEAR, T.ISOTYPE_LOCALSUM_SQUARE,
                   T.ISOTYPE_GLOBALSUM_SEMILINEAR):
        r = oracle(target)
        print(r.text())
        assert r.passed, target
    assert "two_isolated" in wb.default_corpus(T.ISOTYPE_GLOBALSUM_SEMILINEAR).fixtures


@pytest.mark.criterion(8, "multiset equality detector over {-2..2}, size <= 4")
def test_criterion_08_cs_detector():
    errors = []
    for size in range(5):
        for values in itertools.combinations_with_replacement(range(-2, 3), size):
            nonzero = {v for v in values if v}
            want = 0 if len(nonzero) <= 1 else 1
            if C.cs_detect(list(values)) != want:
                errors.append(values)
    assert errors == []


@pytest.mark.criterion(9, "color refinement, bisimulation and unravelling")
def test_criterion_09_refinement():
    assert cr_equivalent(builtin_graph("cycle(3)"), builtin_graph("cycle(6)"), FULL)
    s1, s2 = builtin_graph("star(1)"), builtin_graph("star(2)")
    rel = bisimilar(s1, s2)
    assert rel is not None and verify_bisimulation(s1, s2, rel)
    pts = list(enumerate_pointed_graphs(3, 1))
    failures = [(g, h, r) for g, h in itertools.combinations(pts, 2) for r in range(4)
                if cr_equivalent(g, h, r) != (is_isomorphic(unravel(g, r), unravel(h, r)) is not None)]
    assert failures == []


@pytest.mark.criterion(10, "covering search, verification and double covers")
def test_criterion_10_coverings():
    c3, c6 = builtin_graph("cycle(3)"), builtin_graph("cycle(6)")
    w = find_covering(c6, c3)
    assert w is not None and verify_covering(c6, c3, w)
    assert find_covering(c3, c6) is None
    tri = builtin_graph("triangle_p")
    h, cov = double_cycle_cover(tri)
    assert verify_covering(h, tri, cov)
    sources = list(enumerate_pointed_graphs(4, 1, connected_only=True)) + [h, as_pointed(c6)]
    targets = list(enumerate_pointed_graphs(3, 1, connected_only=True)) + [as_pointed(tri)]
    found, failures = 0, []
    for g in sources:
        for t in targets:
            m = find_covering(g, t)
            if m is not None:
                found += 1
                if not (verify_covering(g, t, m) and cr_equivalent(g, t, FULL)):
                    failures.append((g, t))
    assert found > 0 and failures == []


@pytest.mark.criterion(11, "fixtures diamond2top, q_even, triangle_complement")
def test_criterion_11_fixtures():
    c = C.fixture_classifier("diamond2top")
    for n in range(1, 6):
        base = GraphBatch.enumerate(n, 0)
        batch = base.with_keyings(20, [SEED, n])
        accept, _ = decide_batch(c, batch)
        want = base.adj.sum(axis=2) >= 2
        assert (accept.reshape(base.size, 20, n) == want[:, None, :]).all(), n
    for name in ("q_even_positive", "triangle_complement"):
        r = wb.separation_report(name, seed=SEED)
        print(r.text())
        assert r.passed


@pytest.mark.criterion(12, "invariance falsifier: catches a key leak, clears criteria 1-7 outputs")
def test_criterion_12_invariance():
    leak = GnnClassifier(Val(), AcceptancePolicy.POS_NEG, metadata="accept iff key > 0")
    r = wb.test_key_invariance(leak, max_nodes=1, props=0, keyings=20, seed=SEED)
    assert r.verdict is wb.Verdict.COUNTEREXAMPLE
    assert r.counterexample.replay(leak) == (r.counterexample.decision_a,
                                            r.counterexample.decision_b)
    flagged = []
    for target in (T.GML_LOCALSUM_RELU, T.ML_LOCALMAX_RELU, T.WGML_TOP_LOCALMAX_RELU,
                   T.WGML_MODAL_LOCALMAX_SIGMOID, T.LDDL_LOCALMAX_SEMILINEAR,
                   T.ISOTYPE_LOCALMAX_SEMILINEAR, T.ISOTYPE_LOCALSUM_SQUARE,
                   T.ISOTYPE_GLOBALSUM_SEMILINEAR):
        props = wb.default_corpus(target).props
        for c in oracle(target).classifiers:
            rep = wb.test_key_invariance(c, max_nodes=4, props=props, keyings=10, seed=SEED,
                                         connected_only=True)
            if not rep.ok:
                flagged.append((target.value, c.metadata))
    assert flagged == []


@pytest.mark.criterion(13, "exact vs float evaluation within 1e-9 relative, 1000 triples")
def test_criterion_13_numeric_consistency():
    rng = random.Random(SEED)
    pool = list(enumerate_pointed_graphs(4, 1))
    worst = 0.0
    for i in range(1000):
        expr = F.random_expression(rng, depth=3, aggregates=("localmax", "localsum", "globalsum"))
        pg = rng.choice(pool)
        g = as_keyed(pg, random_keying(pg.graph, i))
        exact = float(F.eval_feature(expr, g, Mode.EXACT)[0])
        approx = float(F.eval_feature(expr, g, Mode.FLOAT)[0])
        worst = max(worst, abs(exact - approx) / max(1.0, abs(exact)))
    print(f"worst relative divergence: {worst:.3e}")
    assert worst <= 1e-9
