"""Feature expressions: the GNN surrogate evaluated over (keyed) pointed graphs.

An expression is a DAG of atoms (label bits, the key), scalar-function
applications and neighbor aggregations.  Evaluation runs bottom-up over a
batch of same-size graphs at once; `eval_feature` and `classify` are the
single-graph entry points.
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from . import scalar as S
from .graphs import Graph, PointedGraph, PointedKeyedGraph, as_keyed
from .scalar import Mode
from .vectors import EXACT_BACKEND, FLOAT_BACKEND, GraphBatch, QArray

FLOAT_EPS = 1e-9


class FeatureError(ValueError):
    pass


class FeatureExpr:
    __slots__ = ()

    def children(self) -> tuple:
        return ()


class Prop(FeatureExpr):
    """Label bit of prop `index` (numbered from 1)."""

    __slots__ = ("index",)

    def __init__(self, index: int):
        if index < 1:
            raise FeatureError("props are numbered from 1")
        self.index = index


class Val(FeatureExpr):
    __slots__ = ()


class Apply(FeatureExpr):
    __slots__ = ("fn", "args")

    def __init__(self, fn: S.ScalarFn, args: Sequence[FeatureExpr]):
        args = tuple(args)
        if S.arity(fn) != len(args):
            raise FeatureError(f"function takes {S.arity(fn)} inputs, got {len(args)}")
        self.fn, self.args = fn, args

    def children(self):
        return self.args


class Aggregate(FeatureExpr):
    __slots__ = ("arg",)
    kind = ""

    def __init__(self, arg: FeatureExpr):
        self.arg = arg

    def children(self):
        return (self.arg,)


class LocalMax(Aggregate):
    __slots__ = ()
    kind = "localmax"


class LocalSum(Aggregate):
    __slots__ = ()
    kind = "localsum"


class GlobalSum(Aggregate):
    __slots__ = ()
    kind = "globalsum"


AGGREGATES = {cls.kind: cls for cls in (LocalMax, LocalSum, GlobalSum)}


# ---------------------------------------------------------------- builders

def const(q) -> Apply:
    return Apply(S.Const(q), [])


def affine(coeffs, exprs, bias=0) -> FeatureExpr:
    exprs = list(exprs)
    return Apply(S.Affine(coeffs, bias, [S.Arg(i) for i in range(len(exprs))]), exprs)


def add(*exprs) -> FeatureExpr:
    return affine([1] * len(exprs), exprs)


def sub(a, b) -> FeatureExpr:
    return affine([1, -1], [a, b])


def neg(e) -> FeatureExpr:
    return affine([-1], [e])


def shift(e, b) -> FeatureExpr:
    return affine([1], [e], b)


def scale(e, c) -> FeatureExpr:
    return affine([c], [e])


def _unary(cls):
    def build(e: FeatureExpr) -> FeatureExpr:
        return Apply(cls(S.Arg(0)), [e])
    build.__name__ = cls.op
    return build


relu = _unary(S.ReLU)
heaviside = _unary(S.Heaviside)
square = _unary(S.Square)
triwave = _unary(S.TriWave)
sigmoid = _unary(S.Sigmoid)


def ifpos(c, a, b) -> FeatureExpr:
    return Apply(S.IfPos(S.Arg(0), S.Arg(1), S.Arg(2)), [c, a, b])


def macro(name: str, *exprs) -> FeatureExpr:
    return Apply(S.macro_fn(name), exprs)


def fmin(a, b):
    return macro("min", a, b)


def fmax(a, b):
    return macro("max", a, b)


def fabs(a):
    return macro("abs", a)


def if_zero(x, a, b):
    return macro("ifZero", x, a, b)


def clip01(a):
    return macro("clip01", a)


def local_min(e) -> FeatureExpr:
    """Minimum over neighbors, written -LocalMax(-e) (0 without neighbors)."""
    return neg(LocalMax(neg(e)))


# ---------------------------------------------------------------- structure

def nodes_postorder(expr: FeatureExpr) -> list:
    """Every distinct node once, children before parents."""
    order, seen = [], set()
    stack = [(expr, False)]
    while stack:
        node, done = stack.pop()
        if done:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for c in reversed(node.children()):
            if id(c) not in seen:
                stack.append((c, False))
    return order


def aggregation_depth(expr: FeatureExpr) -> int:
    depth: dict = {}
    for node in nodes_postorder(expr):
        d = max((depth[id(c)] for c in node.children()), default=0)
        depth[id(node)] = d + 1 if isinstance(node, Aggregate) else d
    return depth[id(expr)]


def feature_primitives(expr: FeatureExpr) -> set:
    """Names of every scalar primitive and aggregation kind used."""
    names = set()
    fns = {}
    for node in nodes_postorder(expr):
        if isinstance(node, Apply):
            fns[id(node.fn)] = node.fn
        elif isinstance(node, Aggregate):
            names.add(node.kind)
        elif isinstance(node, Prop):
            names.add("prop")
        elif isinstance(node, Val):
            names.add("val")
    for fn in fns.values():
        names |= S.primitive_names(fn)
    return names


def uses_val(expr: FeatureExpr) -> bool:
    return any(isinstance(n, Val) for n in nodes_postorder(expr))


def expr_size(expr: FeatureExpr) -> int:
    return len(nodes_postorder(expr))


def random_expression(rng: random.Random, depth: int = 3, props: int = 1,
                      aggregates: Sequence[str] = ("localmax", "localsum"),
                      use_val: bool = True, with_sigmoid: bool = False) -> FeatureExpr:
    """A random expression for property tests.

    Coefficients are small rationals and square is applied at most once per
    path, so exact values stay modest on desk-scale graphs.
    """
    atoms = [Prop(i) for i in range(1, props + 1)] + ([Val()] if use_val else [])
    atoms = atoms or [const(1)]
    unary = [relu, heaviside, triwave, square] + ([sigmoid] if with_sigmoid else [])

    def coef():
        return Fraction(rng.randint(-6, 6), rng.choice([1, 2, 4]))

    def build(d: int, squared: bool) -> FeatureExpr:
        if d == 0 or rng.random() < 0.2:
            return rng.choice(atoms) if rng.random() < 0.85 else const(coef())
        kind = rng.choice(["agg", "agg", "affine", "unary", "ifpos"] if aggregates else
                          ["affine", "unary", "ifpos"])
        if kind == "agg":
            return AGGREGATES[rng.choice(list(aggregates))](build(d - 1, squared))
        if kind == "affine":
            k = rng.randint(1, 2)
            return affine([coef() for _ in range(k)], [build(d - 1, squared) for _ in range(k)],
                          coef())
        if kind == "ifpos":
            return ifpos(*(build(d - 1, squared) for _ in range(3)))
        fn = rng.choice([u for u in unary if not (squared and u is square)])
        return fn(build(d - 1, squared or fn is square))

    return build(depth, False)


# ---------------------------------------------------------------- evaluation

def _backend(mode: Mode):
    return EXACT_BACKEND if mode is Mode.EXACT else FLOAT_BACKEND


def evaluate_batch(expr: FeatureExpr, batch: GraphBatch, mode: Mode = Mode.EXACT):
    """Per-node values over every graph of the batch, as a (B, n) array."""
    be = _backend(mode)
    shape = (batch.size, batch.n)
    order = nodes_postorder(expr)
    if mode is Mode.EXACT and "sigmoid" in feature_primitives(expr):
        raise FeatureError("sigmoid cannot be evaluated in exact mode")
    keys = None
    memo: dict = {}
    for node in order:
        if isinstance(node, Prop):
            if node.index > batch.prop_count:
                raise FeatureError(f"prop index {node.index} out of range 1..{batch.prop_count}")
            r = be.bits(batch.labels[:, :, node.index - 1])
        elif isinstance(node, Val):
            if batch.keys is None:
                raise FeatureError("expression reads keys but the graph carries no keying")
            if keys is None:
                keys = batch.keys if mode is Mode.EXACT else batch.keys.to_float()
            r = keys
        elif isinstance(node, Apply):
            r = S.eval_fn_arrays(node.fn, [memo[id(a)] for a in node.args], be, shape)
        elif isinstance(node, LocalMax):
            r = be.local_max(memo[id(node.arg)], batch.adj)
        elif isinstance(node, LocalSum):
            r = be.local_sum(memo[id(node.arg)], batch.adj)
        elif isinstance(node, GlobalSum):
            r = be.global_sum(memo[id(node.arg)])
        else:
            raise FeatureError(f"unknown feature node {node!r}")
        memo[id(node)] = r
    return memo[id(expr)]


def _single_batch(g: PointedKeyedGraph) -> GraphBatch:
    return GraphBatch.from_graphs([g.graph], None if g.keying is None else [g.keying])


def eval_feature(expr: FeatureExpr, g, mode: Mode = Mode.EXACT):
    """(value at the point, list of values at every node)."""
    g = as_keyed(g)
    values = evaluate_batch(expr, _single_batch(g), mode)
    be = _backend(mode)
    per_node = [be.scalar(values, (0, v)) for v in range(g.node_count)]
    return per_node[g.point], per_node


class AcceptancePolicy(enum.Enum):
    POS_NONPOS = ">0/<=0"
    POS_NEG = ">0/<0"
    ONE_ZERO = ">=1/<=0"


@dataclass
class GnnClassifier:
    expr: FeatureExpr
    policy: AcceptancePolicy = AcceptancePolicy.POS_NONPOS
    mode: Mode = Mode.EXACT
    metadata: str = ""

    def __post_init__(self):
        if self.mode is Mode.EXACT and "sigmoid" in feature_primitives(self.expr):
            raise FeatureError("exact classifiers cannot contain sigmoid")


@dataclass(frozen=True)
class Decision:
    accept: bool
    output: object


def accepts(value, mode: Mode) -> bool:
    return value > (FLOAT_EPS if mode is Mode.FLOAT else 0)


def classify(c: GnnClassifier, g) -> Decision:
    value, _ = eval_feature(c.expr, g, c.mode)
    return Decision(bool(accepts(value, c.mode)), value)


def decide_batch(c: GnnClassifier, batch: GraphBatch):
    values = evaluate_batch(c.expr, batch, c.mode)
    return _backend(c.mode).positive(values), values


def violates(policy: AcceptancePolicy, value, mode: Mode) -> bool:
    eps = FLOAT_EPS if mode is Mode.FLOAT else 0
    if policy is AcceptancePolicy.POS_NEG:
        return abs(value) <= eps
    if policy is AcceptancePolicy.ONE_ZERO:
        return eps < value < 1 - eps
    return False


def violation_mask(policy: AcceptancePolicy, values, mode: Mode) -> np.ndarray:
    if mode is Mode.FLOAT:
        if policy is AcceptancePolicy.POS_NEG:
            return np.abs(values) <= FLOAT_EPS
        if policy is AcceptancePolicy.ONE_ZERO:
            return (values > FLOAT_EPS) & (values < 1 - FLOAT_EPS)
        return np.zeros(values.shape, dtype=bool)
    if policy is AcceptancePolicy.POS_NEG:
        return values.num == 0
    if policy is AcceptancePolicy.ONE_ZERO:
        # 0 < num/den < 1  <=>  0 < num < den
        return (values.num > 0) & (values.num < values.dens())
    return np.zeros(values.shape, dtype=bool)


# ---------------------------------------------------------------- sweeps

@dataclass
class SweepGroup:
    graphs: list
    batch: GraphBatch
    keyings: int
    accept: np.ndarray
    values: object

    def row(self, graph_index: int, keying_index: int) -> int:
        return graph_index * max(self.keyings, 1) + keying_index


@dataclass
class Sweep:
    """Decisions of one classifier on many pointed graphs under several keyings."""

    classifier: GnnClassifier
    pointed: list
    keyings: int
    seed: int
    groups: dict = field(default_factory=dict)
    where: list = field(default_factory=list)     # pointed index -> (n, graph index)

    def decisions(self, i: int) -> list:
        n, gi = self.where[i]
        grp = self.groups[n]
        p = self.pointed[i].point
        return [bool(grp.accept[grp.row(gi, j), p]) for j in range(max(self.keyings, 1))]

    def output(self, i: int, j: int):
        n, gi = self.where[i]
        grp = self.groups[n]
        be = _backend(self.classifier.mode)
        return be.scalar(grp.values, (grp.row(gi, j), self.pointed[i].point))

    def keying(self, i: int, j: int):
        n, gi = self.where[i]
        grp = self.groups[n]
        return grp.batch.keys_of(grp.row(gi, j))

    def keyed(self, i: int, j: int) -> PointedKeyedGraph:
        keys = self.keying(i, j)
        return as_keyed(self.pointed[i], keys)


def sweep(c: GnnClassifier, pointed: Iterable, keyings: int, seed: int) -> Sweep:
    """Evaluate `c` on each pointed graph under `keyings` seeded keyings (0 = unkeyed)."""
    pointed = [g.pointed if isinstance(g, PointedKeyedGraph) else g for g in pointed]
    result = Sweep(c, pointed, keyings, seed)
    index: dict = {}
    by_n: dict = {}
    for pg in pointed:
        g = pg.graph
        if g not in index:
            lst = by_n.setdefault(g.node_count, [])
            index[g] = (g.node_count, len(lst))
            lst.append(g)
        result.where.append(index[g])
    for n, graphs in sorted(by_n.items()):
        batch = GraphBatch.from_graphs(graphs)
        if keyings:
            batch = batch.with_keyings(keyings, [seed, n])
        accept, values = decide_batch(c, batch)
        result.groups[n] = SweepGroup(graphs, batch, keyings, accept, values)
    return result


@dataclass
class PolicyViolation:
    graph: PointedKeyedGraph
    output: object


@dataclass
class PolicyReport:
    policy: AcceptancePolicy
    instances: int
    violations: list

    @property
    def ok(self) -> bool:
        return not self.violations


def check_policy_conformance(c: GnnClassifier, graphs: Iterable, keyings_per_graph: int,
                             seed: int = 0) -> PolicyReport:
    s = sweep(c, graphs, keyings_per_graph, seed)
    viol = []
    masks = {n: violation_mask(c.policy, grp.values, c.mode) for n, grp in s.groups.items()}
    k = max(keyings_per_graph, 1)
    for i, pg in enumerate(s.pointed):
        n, gi = s.where[i]
        grp = s.groups[n]
        for j in range(k):
            if masks[n][grp.row(gi, j), pg.point]:
                viol.append(PolicyViolation(s.keyed(i, j), s.output(i, j)))
    return PolicyReport(c.policy, len(s.pointed) * k, viol)


# ---------------------------------------------------------------- layers

@dataclass
class Stage:
    kind: str                  # "localmax" or "sum"
    combine: list              # ScalarFns over emb + agg(emb) [+ globalsum(emb)]


@dataclass
class LayeredModel:
    atoms: list                # distinct Prop/Val leaves
    initial: list              # ScalarFns over the atoms: the embedding before stage 1
    stages: list
    readout: S.ScalarFn

    def width(self, t: int) -> int:
        return len(self.initial) if t == 0 else len(self.stages[t - 1].combine)


def _atom_key(node):
    return ("val",) if isinstance(node, Val) else ("prop", node.index)


def layerize(expr: FeatureExpr) -> LayeredModel:
    """Staged view: one stage per aggregation level, each aggregating the whole
    embedding and then recombining it with scalar functions."""
    order = nodes_postorder(expr)
    aggs = [n for n in order if isinstance(n, Aggregate)]
    kinds = {("localmax" if isinstance(a, LocalMax) else "sum") for a in aggs}
    if len(kinds) > 1:
        raise FeatureError("layerize needs a single aggregation kind (max or sum)")
    kind = kinds.pop() if kinds else None
    depth: dict = {}
    for node in order:
        d = max((depth[id(c)] for c in node.children()), default=0)
        depth[id(node)] = d + 1 if isinstance(node, Aggregate) else d
    D = depth[id(expr)]
    atom_nodes = {}
    for n in order:
        if isinstance(n, (Prop, Val)):
            atom_nodes.setdefault(_atom_key(n), []).append(n)
    keys = sorted(atom_nodes, key=lambda k: (1 << 30) if k[0] == "val" else k[1])
    atoms = [atom_nodes[k][0] for k in keys]

    def emb(t: int) -> list:
        items, seen = [], set()
        for node in atoms + [a for a in aggs if depth[id(a)] <= t] + \
                [a.arg for a in aggs if depth[id(a)] == t + 1]:
            ident = _atom_key(node) if isinstance(node, (Prop, Val)) else id(node)
            if ident not in seen:
                seen.add(ident)
                items.append(node)
        return items

    def translate(node, leaves: dict, memo: dict) -> S.ScalarFn:
        if isinstance(node, (Prop, Val)):
            return leaves[_atom_key(node)]
        if id(node) in leaves:
            return leaves[id(node)]
        if id(node) in memo:
            return memo[id(node)]
        if not isinstance(node, Apply):
            raise FeatureError("internal: leaf missing from stage inputs")
        r = S.substitute(node.fn, [translate(a, leaves, memo) for a in node.args])
        memo[id(node)] = r
        return r

    def base_leaves(items) -> dict:
        leaves = {}
        for i, x in enumerate(items):
            if isinstance(x, (Prop, Val)):
                leaves[_atom_key(x)] = S.Arg(i)
            elif isinstance(x, Aggregate):
                leaves[id(x)] = S.Arg(i)
        return leaves

    prev = emb(0)
    atom_leaves = {_atom_key(a): S.Arg(i) for i, a in enumerate(atoms)}
    memo: dict = {}
    initial = [translate(x, atom_leaves, memo) for x in prev]
    stages = []
    for t in range(1, D + 1):
        cur = emb(t)
        w = len(prev)
        leaves = base_leaves(prev)
        pos = {id(x): i for i, x in enumerate(prev)}
        for x in prev:
            if isinstance(x, (Prop, Val)):
                pos[_atom_key(x)] = pos[id(x)]
        for a in aggs:
            if depth[id(a)] == t:
                c = a.arg
                i = pos[_atom_key(c)] if isinstance(c, (Prop, Val)) else pos[id(c)]
                off = 2 * w if isinstance(a, GlobalSum) else w
                leaves[id(a)] = S.Arg(off + i)
        memo = {}
        stages.append(Stage(kind, [translate(x, leaves, memo) for x in cur]))
        prev = cur
    readout = translate(expr, base_leaves(prev), {})
    return LayeredModel(atoms, initial, stages, readout)


def evaluate_layered(model: LayeredModel, batch: GraphBatch, mode: Mode = Mode.EXACT):
    be = _backend(mode)
    shape = (batch.size, batch.n)
    atoms = []
    for a in model.atoms:
        if isinstance(a, Prop):
            atoms.append(be.bits(batch.labels[:, :, a.index - 1]))
        else:
            atoms.append(batch.keys if mode is Mode.EXACT else batch.keys.to_float())
    memo: dict = {}
    embedding = [S.eval_fn_arrays(f, atoms, be, shape, memo) for f in model.initial]
    for stage in model.stages:
        if stage.kind == "localmax":
            inputs = embedding + [be.local_max(x, batch.adj) for x in embedding]
        else:
            inputs = embedding + [be.local_sum(x, batch.adj) for x in embedding] + \
                [be.global_sum(x) for x in embedding]
        memo = {}
        embedding = [S.eval_fn_arrays(f, inputs, be, shape, memo) for f in stage.combine]
    return S.eval_fn_arrays(model.readout, embedding, be, shape)
