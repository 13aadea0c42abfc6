"""Classifiers accepting exactly one isomorphism type of pointed graph.

All three share a plan: recover the N keys of the input in descending order
as features c_1 > ... > c_N, check that the input has exactly N nodes, then
try every bijection pi of the target's nodes onto the key ranks and verify
labels and adjacency.  They differ in how the keys and the size are obtained:
windows of LocalMax, walk-weighted LocalSum averages, or GlobalSum.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

from .. import features as F
from ..features import AcceptancePolicy, FeatureExpr, GnnClassifier
from ..graphs import Graph, Keying, PointedGraph, PointedKeyedGraph, as_pointed, write_graph
from ..scalar import Mode
from .common import (ONE, ZERO, CompileError, CompileTarget, at_least, equals, finish,
                     indicator, nonzero_key)

MAX_LOCAL_NODES = 4
MAX_SQUARE_NODES = 3
MAX_GLOBAL_NODES = 4


def _source(g: PointedGraph) -> str:
    return " ".join(write_graph(g).split())


def _check_target(g, limit: int, connected: bool) -> PointedGraph:
    g = as_pointed(g)
    if g.node_count > limit:
        raise CompileError(f"target has {g.node_count} nodes; this compiler supports at most {limit}")
    if connected and not g.graph.is_connected():
        raise CompileError("target graph must be connected")
    return g


def _target_order(g: PointedGraph) -> list:
    """Target nodes with the point first: u_1 is the point."""
    return [g.point] + [v for v in range(g.node_count) if v != g.point]


def _label_match(g: PointedGraph, v: int) -> FeatureExpr:
    P = g.graph.prop_count
    if P == 0:
        return ONE
    bits = [F.Prop(p + 1) if g.graph.labels[v][p] else F.affine([-1], [F.Prop(p + 1)], 1)
            for p in range(P)]
    return at_least(bits, P)


def _iterate(x: FeatureExpr, times: int, step) -> FeatureExpr:
    for _ in range(times):
        x = step(x)
    return x


def max_window(x: FeatureExpr, radius: int) -> FeatureExpr:
    """Maximum of x over the radius-ball (nodes with no neighbors keep x)."""
    return _iterate(x, radius, lambda y: F.fmax(y, F.LocalMax(y)))


def min_window(x: FeatureExpr, radius: int) -> FeatureExpr:
    return _iterate(x, radius, lambda y: F.fmin(y, F.local_min(y)))


def sum_window(x: FeatureExpr, radius: int) -> FeatureExpr:
    """For 0/1-valued x: 1 if some node in the radius-ball has x = 1."""
    return _iterate(x, radius, lambda y: F.fmin(F.add(y, F.LocalSum(y)), ONE))


def _permutation_checks(g: PointedGraph, key_is, spread, neighbor_count) -> FeatureExpr:
    """Sum over bijections pi of [u_i -> node with the pi(i)-th largest key is
    a pointed, label-preserving isomorphism].

    key_is[t](x) is 1 iff x holds the (t+1)-th largest key; spread(e) tells
    whether some relevant node has e = 1; neighbor_count(e) counts neighbors
    with e = 1.
    """
    order = _target_order(g)
    N = len(order)
    adj = [[g.graph.has_edge(order[i], order[j]) for j in range(N)] for i in range(N)]
    labels = [_label_match(g, v) for v in order]
    counts = [neighbor_count(k) for k in key_is]
    inverted = [F.affine([-1], [c], 1) for c in counts]
    total = []
    for pi in itertools.permutations(range(N)):
        hits = []
        for i in range(N):
            nb = at_least([counts[pi[j]] if adj[i][j] else inverted[pi[j]] for j in range(N)], N)
            here = at_least([key_is[pi[i]], labels[i], nb], 3)
            hits.append(spread(here))
        total.append(at_least(hits + [key_is[pi[0]]], N + 1))
    return F.add(*total)


# ---------------------------------------------------------------- LocalMax

def compile_isotype_localmax(g) -> GnnClassifier:
    """Accept H^v iff the component of v is isomorphic to the connected target."""
    g = _check_target(g, MAX_LOCAL_NODES, connected=True)
    N = g.node_count
    target = CompileTarget.ISOTYPE_LOCALMAX_SEMILINEAR
    policy = AcceptancePolicy.POS_NONPOS
    if N == 1:
        expr = F.relu(F.sub(_label_match(g, g.point), F.LocalMax(ONE)))
        return finish(expr, target, policy, Mode.EXACT, _source(g))

    K = nonzero_key()
    kmin = min_window(K, 2 * N)
    below = F.shift(kmin, -1)          # strictly below every key in reach
    vals = [K]
    keys = []
    for _ in range(N):
        k = max_window(vals[-1], 2 * N)
        keys.append(k)
        vals.append(F.ifpos(F.sub(k, K), K, below))
    # size: every rank 1..N is dropped somewhere nearby, and nothing is left
    dropped = [max_window(F.ifpos(F.sub(vals[i], vals[i + 1]), ONE, ZERO), N) for i in range(N)]
    leftover = max_window(F.ifpos(F.sub(K, vals[N]), ZERO, ONE), N)
    size_ok = at_least(dropped + [F.affine([-1], [leftover], 1)], N + 1)

    key_is = [equals(k, K) for k in keys]
    checks = _permutation_checks(g, key_is, lambda e: max_window(e, N), F.LocalMax)
    expr = F.ifpos(size_ok, F.ifpos(F.LocalMax(ONE), checks, ZERO), ZERO)
    return finish(expr, target, policy, Mode.EXACT, _source(g))


# ---------------------------------------------------------------- LocalSum + square

def cs_detector_expr(f1: FeatureExpr, f2: FeatureExpr, f3: FeatureExpr, kmax: int) -> FeatureExpr:
    """g(a, b, c) for a = #nonzeros, b = their sum, c = their sum of squares:
    1 if the nonzero values are not all equal, 0 if they are (a <= kmax).
    By Cauchy-Schwarz, a*c - b^2 >= 0 with equality iff all values agree."""
    terms = [F.ifpos(F.affine([-1], [F.fabs(F.shift(f1, -t))], 1),
                     F.affine([t, -1], [f3, F.square(f2)]), ZERO)
             for t in range(1, kmax + 1)]
    return F.ifpos(F.add(*terms), ONE, ZERO)


def cs_detector(x: FeatureExpr, kmax: int) -> FeatureExpr:
    """The detector applied to the multiset of x over each node's neighbors."""
    return cs_detector_expr(F.LocalSum(indicator(x)), F.LocalSum(x), F.LocalSum(F.square(x)), kmax)


def cs_detect(values, kmax: int | None = None) -> int:
    """Run the detector on a multiset of rationals, exactly."""
    values = [Fraction(v) for v in values]
    n = len(values)
    g = Graph.from_edges(n + 1, [(0, i) for i in range(1, n + 1)], None, 0)
    kg = PointedKeyedGraph(PointedGraph(g, 0), Keying([0] + values, injective=False))
    expr = cs_detector(F.Val(), kmax if kmax is not None else max(n, 1))
    value, _ = F.eval_feature(expr, kg)
    return int(value)


def _divide_by_count(total: FeatureExpr, count: FeatureExpr, limit: int) -> FeatureExpr:
    """total / count for integer counts 1..limit (0 outside that range)."""
    terms = [F.ifpos(F.affine([-1], [F.fabs(F.shift(count, -l))], 1),
                     F.scale(total, Fraction(1, l)), ZERO)
             for l in range(1, limit + 1)]
    return F.add(*terms)


def _walk_sum(x: FeatureExpr, length: int) -> FeatureExpr:
    """Sum over walks of length 1..length of x at the walk's end."""
    parts, y = [], x
    for _ in range(length):
        y = F.LocalSum(y)
        parts.append(y)
    return F.add(*parts)


def _extract_keys(K: FeatureExpr, N: int, average) -> list:
    """c_1 > ... > c_N by repeated averaging: each round drops the active
    values lying below the average; after N - 1 rounds only the largest is
    left and its average is that key."""
    keys = []
    for i in range(N):
        active = K if i == 0 else F.ifpos(F.sub(keys[-1], K), K, ZERO)
        for j in range(N):
            avg = average(active)
            if j < N - 1:
                active = F.ifpos(F.sub(avg, active), ZERO, active)
        keys.append(avg)
    return keys


def compile_isotype_localsum_square(g) -> GnnClassifier:
    """Accept H^v iff the component of v is isomorphic to the connected target,
    using LocalSum, semilinear functions and squaring."""
    g = _check_target(g, MAX_SQUARE_NODES, connected=True)
    N = g.node_count
    target = CompileTarget.ISOTYPE_LOCALSUM_SQUARE
    policy = AcceptancePolicy.POS_NONPOS
    if N == 1:
        expr = F.relu(F.sub(_label_match(g, g.point), F.LocalSum(ONE)))
        return finish(expr, target, policy, Mode.EXACT, _source(g))

    K = nonzero_key()
    degree = F.LocalSum(ONE)
    # walks of length <= 2N on a graph of N nodes and degree <= N - 1
    walk_bound = sum((N - 1) ** l for l in range(1, 2 * N + 1))

    def average(x):
        weight = _walk_sum(indicator(x), 2 * N)
        return _divide_by_count(_walk_sum(x, 2 * N), weight, walk_bound)

    keys = _extract_keys(K, N, average)
    key_is = [equals(c, K) for c in keys]

    # A node is bad when its degree is too large, its key is not among the
    # c_t, or some neighbor disagrees with it on some c_t.
    bad = [F.relu(F.shift(degree, -N)), F.relu(F.affine([-1] * N, key_is, 1))]
    for c in keys:
        nz = F.ifpos(F.neg(c), c, F.shift(c, 1))
        multi = cs_detector(nz, N)
        mean = _divide_by_count(F.LocalSum(nz), F.LocalSum(indicator(nz)), N)
        bad += [multi, indicator(F.sub(mean, nz))]
    any_bad = sum_window(F.fmin(F.add(*bad), ONE), N)
    distinct = [F.ifpos(F.sub(keys[t], keys[t + 1]), ONE, ZERO) for t in range(N - 1)]
    present = [sum_window(k, N) for k in key_is]
    size_ok = at_least(present + distinct + [F.affine([-1], [any_bad], 1)], 2 * N)

    checks = _permutation_checks(g, key_is, lambda e: sum_window(e, N), F.LocalSum)
    expr = F.ifpos(size_ok, checks, ZERO)
    return finish(expr, target, policy, Mode.EXACT, _source(g))


# ---------------------------------------------------------------- GlobalSum

def compile_isotype_globalsum(g) -> GnnClassifier:
    """Accept H^v iff the whole of H, pointed at v, is isomorphic to the target
    (which may be disconnected)."""
    g = _check_target(g, MAX_GLOBAL_NODES, connected=False)
    N = g.node_count
    size_ok = F.relu(F.affine([-1], [F.fabs(F.shift(F.GlobalSum(ONE), -N))], 1))

    def average(x):
        return _divide_by_count(F.GlobalSum(x), F.GlobalSum(indicator(x)), N)

    K = nonzero_key()
    keys = _extract_keys(K, N, average)
    key_is = [equals(c, K) for c in keys]
    spread = lambda e: F.fmin(F.GlobalSum(e), ONE)  # noqa: E731
    checks = _permutation_checks(g, key_is, spread, F.LocalSum)
    expr = F.ifpos(size_ok, checks, ZERO)
    return finish(expr, CompileTarget.ISOTYPE_GLOBALSUM_SEMILINEAR, AcceptancePolicy.POS_NONPOS,
                  Mode.EXACT, _source(g))
