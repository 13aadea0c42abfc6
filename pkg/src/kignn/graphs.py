"""Graphs, pointed graphs, keyings, the .pg format and small-graph enumeration."""

from __future__ import annotations

import itertools
import re
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterator, Sequence

import numpy as np

from .rational import format_rational, parse_rational

MAX_ENUM_NODES = 6
MAX_ENUM_PROPS = 2
KEY_RANGE = 10**6
KEY_SCALE = 1000


class GraphError(ValueError):
    """Raised for malformed graphs or .pg text. Carries the offending line when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class Graph:
    node_count: int
    prop_count: int
    edges: frozenset = frozenset()
    labels: tuple = ()

    def __post_init__(self):
        n = self.node_count
        if n < 0 or self.prop_count < 0:
            raise GraphError("node and prop counts must be nonnegative")
        canon = set()
        for u, v in self.edges:
            if u == v:
                raise GraphError(f"self-loop at node {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise GraphError(f"edge ({u}, {v}) out of range")
            canon.add((min(u, v), max(u, v)))
        object.__setattr__(self, "edges", frozenset(canon))
        labels = self.labels or tuple((0,) * self.prop_count for _ in range(n))
        labels = tuple(tuple(int(b) for b in lab) for lab in labels)
        if len(labels) != n or any(len(lab) != self.prop_count for lab in labels):
            raise GraphError("every node needs exactly prop_count label bits")
        if any(b not in (0, 1) for lab in labels for b in lab):
            raise GraphError("label bits must be 0 or 1")
        object.__setattr__(self, "labels", labels)

    @classmethod
    def from_edges(cls, n: int, edges=(), labels=None, prop_count: int = 0) -> "Graph":
        if labels is not None and len(labels) and prop_count == 0:
            prop_count = len(labels[0])
        return cls(n, prop_count, frozenset(tuple(e) for e in edges), tuple(labels or ()))

    @cached_property
    def adjacency(self) -> tuple:
        nbrs = [[] for _ in range(self.node_count)]
        for u, v in self.edges:
            nbrs[u].append(v)
            nbrs[v].append(u)
        return tuple(tuple(sorted(x)) for x in nbrs)

    def neighbors(self, v: int) -> tuple:
        return self.adjacency[v]

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    def has_edge(self, u: int, v: int) -> bool:
        return (min(u, v), max(u, v)) in self.edges

    def has_prop(self, v: int, i: int) -> bool:
        """Props are numbered from 1, matching `p1` in formulas."""
        if not 1 <= i <= self.prop_count:
            raise GraphError(f"prop index {i} out of range 1..{self.prop_count}")
        return self.labels[v][i - 1] == 1

    def with_prop_count(self, prop_count: int) -> "Graph":
        """Pad (with zero bits) or keep labels; shrinking is only allowed over zero bits."""
        if prop_count < self.prop_count and any(any(lab[prop_count:]) for lab in self.labels):
            raise GraphError("cannot drop props that are set")
        labels = tuple((lab + (0,) * prop_count)[:prop_count] for lab in self.labels)
        return Graph(self.node_count, prop_count, self.edges, labels)

    def adjacency_matrix(self) -> np.ndarray:
        a = np.zeros((self.node_count, self.node_count), dtype=bool)
        for u, v in self.edges:
            a[u, v] = a[v, u] = True
        return a

    def is_connected(self) -> bool:
        return self.node_count <= 1 or len(bfs_order(self, 0)) == self.node_count


@dataclass(frozen=True)
class PointedGraph:
    graph: Graph
    point: int = 0

    def __post_init__(self):
        if not 0 <= self.point < self.graph.node_count:
            raise GraphError(f"point {self.point} out of range")

    @property
    def node_count(self) -> int:
        return self.graph.node_count


@dataclass(frozen=True)
class Keying:
    values: tuple
    injective: bool = True

    def __post_init__(self):
        vals = tuple(Fraction(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        if self.injective and len(set(vals)) != len(vals):
            raise GraphError("keyed extension needs pairwise distinct keys")

    def __len__(self):
        return len(self.values)

    def __getitem__(self, v):
        return self.values[v]


@dataclass(frozen=True)
class PointedKeyedGraph:
    pointed: PointedGraph
    keying: Keying | None = None

    def __post_init__(self):
        if self.keying is not None and len(self.keying) != self.pointed.node_count:
            raise GraphError("keying must cover every node")

    @property
    def graph(self) -> Graph:
        return self.pointed.graph

    @property
    def point(self) -> int:
        return self.pointed.point

    @property
    def node_count(self) -> int:
        return self.pointed.graph.node_count


def as_keyed(g, keying: Keying | Sequence | None = None) -> PointedKeyedGraph:
    """Accept a Graph, PointedGraph or PointedKeyedGraph and attach an optional keying."""
    if isinstance(g, PointedKeyedGraph):
        if keying is None:
            return g
        g = g.pointed
    if isinstance(g, Graph):
        g = PointedGraph(g, 0)
    if keying is not None and not isinstance(keying, Keying):
        keying = Keying(tuple(keying))
    return PointedKeyedGraph(g, keying)


def as_pointed(g) -> PointedGraph:
    if isinstance(g, PointedKeyedGraph):
        return g.pointed
    if isinstance(g, Graph):
        return PointedGraph(g, 0)
    return g


# ---------------------------------------------------------------- .pg format

def parse_graph(text: str) -> PointedKeyedGraph:
    n = props = point = None
    edges: set = set()
    labels: dict = {}
    keys: dict = {}
    key_values: dict = {}
    last = 0

    def node(tok: str, ln: int) -> int:
        if not re.fullmatch(r"\d+", tok):
            raise GraphError(f"bad node id {tok!r}", ln)
        v = int(tok)
        if not v < n:
            raise GraphError(f"node {v} out of range (nodes {n})", ln)
        return v

    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        last = ln
        parts = line.split()
        kw, args = parts[0], parts[1:]
        if n is None:
            if kw != "nodes" or len(args) != 1 or not args[0].isdigit():
                raise GraphError("first line must be `nodes <n>`", ln)
            n = int(args[0])
            continue
        if props is None:
            if kw != "props" or len(args) != 1 or not args[0].isdigit():
                raise GraphError("second line must be `props <P>`", ln)
            props = int(args[0])
            continue
        if kw == "edge" and len(args) == 2:
            u, v = node(args[0], ln), node(args[1], ln)
            if u == v:
                raise GraphError(f"self-loop at node {u}", ln)
            e = (min(u, v), max(u, v))
            if e in edges:
                raise GraphError(f"duplicate edge {u} {v}", ln)
            edges.add(e)
        elif kw == "label" and len(args) == 2:
            v = node(args[0], ln)
            bits = args[1]
            if len(bits) != props or set(bits) - {"0", "1"}:
                raise GraphError(f"label needs {props} bits, got {bits!r}", ln)
            if v in labels:
                raise GraphError(f"duplicate label for node {v}", ln)
            labels[v] = tuple(int(b) for b in bits)
        elif kw == "point" and len(args) == 1:
            if point is not None:
                raise GraphError("point given twice", ln)
            point = node(args[0], ln)
        elif kw == "key" and len(args) == 2:
            v = node(args[0], ln)
            try:
                q = parse_rational(args[1])
            except ValueError as exc:
                raise GraphError(str(exc), ln) from None
            if v in keys:
                raise GraphError(f"node {v} keyed twice", ln)
            if q in key_values:
                raise GraphError(f"duplicate key value {args[1]}", ln)
            keys[v] = q
            key_values[q] = v
        else:
            raise GraphError(f"unrecognized line {line!r}", ln)
    if n is None or props is None:
        raise GraphError("missing `nodes`/`props` header", last or None)
    if point is None:
        raise GraphError("missing `point`", last or None)
    if keys and len(keys) != n:
        missing = min(set(range(n)) - set(keys))
        raise GraphError(f"key lines are all-or-none; node {missing} has no key", last)
    lab = tuple(labels.get(v, (0,) * props) for v in range(n))
    g = Graph(n, props, frozenset(edges), lab)
    keying = Keying(tuple(keys[v] for v in range(n))) if keys else None
    return PointedKeyedGraph(PointedGraph(g, point), keying)


def write_graph(g) -> str:
    g = as_keyed(g)
    gr = g.graph
    lines = [f"nodes {gr.node_count}", f"props {gr.prop_count}"]
    for v, lab in enumerate(gr.labels):
        if any(lab):
            lines.append(f"label {v} {''.join(map(str, lab))}")
    lines += [f"edge {u} {v}" for u, v in sorted(gr.edges)]
    lines.append(f"point {g.point}")
    if g.keying is not None:
        lines += [f"key {v} {format_rational(q)}" for v, q in enumerate(g.keying.values)]
    return "\n".join(lines)


# ---------------------------------------------------------------- fixtures

def builtin_graph(name: str, params: Sequence[int] = (), prop_count: int | None = None) -> PointedKeyedGraph:
    """Named fixtures; `name` may also carry its parameter inline, e.g. "cycle(3)"."""
    m = re.fullmatch(r"\s*([a-z_]+)\s*(?:\((\d+)\))?\s*", name)
    if not m:
        raise GraphError(f"unknown fixture {name!r}")
    name = m.group(1)
    params = list(params) or ([int(m.group(2))] if m.group(2) else [])

    def arg() -> int:
        if len(params) != 1 or params[0] < 0:
            raise GraphError(f"fixture {name} needs one nonnegative size parameter")
        return params[0]

    labels = None
    if name == "cycle":
        n = arg()
        if n < 3:
            raise GraphError("cycle needs n >= 3")
        edges = [(i, (i + 1) % n) for i in range(n)]
    elif name == "path":
        n = arg()
        if n < 1:
            raise GraphError("path needs n >= 1")
        edges = [(i, i + 1) for i in range(n - 1)]
    elif name == "star":
        k = arg()
        n, edges = k + 1, [(0, i) for i in range(1, k + 1)]
    elif name == "complete":
        n = arg()
        if n < 1:
            raise GraphError("complete needs n >= 1")
        edges = list(itertools.combinations(range(n), 2))
    elif name == "single_node":
        n, edges = 1, []
    elif name == "edge":
        n, edges = 2, [(0, 1)]
    elif name == "triangle_p":
        n, edges = 3, [(0, 1), (1, 2), (0, 2)]
        labels = [(0,), (1,), (0,)]
    elif name == "two_isolated":
        n, edges = 2, []
    else:
        raise GraphError(f"unknown fixture {name!r}")
    base = 1 if labels else 0
    g = Graph.from_edges(n, edges, labels, prop_count=base)
    if prop_count is not None:
        g = g.with_prop_count(prop_count)
    return PointedKeyedGraph(PointedGraph(g, 0))


# ---------------------------------------------------------------- traversal

def bfs_order(g: Graph, start: int, radius: int | None = None) -> list:
    dist = {start: 0}
    order = [start]
    queue = deque([start])
    while queue:
        v = queue.popleft()
        if radius is not None and dist[v] >= radius:
            continue
        for w in g.neighbors(v):
            if w not in dist:
                dist[w] = dist[v] + 1
                order.append(w)
                queue.append(w)
    return order


def distances(g: Graph, start: int) -> list:
    """BFS distance from `start`; -1 for unreachable nodes."""
    dist = [-1] * g.node_count
    dist[start] = 0
    queue = deque([start])
    while queue:
        v = queue.popleft()
        for w in g.neighbors(v):
            if dist[w] < 0:
                dist[w] = dist[v] + 1
                queue.append(w)
    return dist


def induced_subgraph(g: Graph, nodes: Sequence[int]) -> Graph:
    index = {v: i for i, v in enumerate(nodes)}
    edges = [(index[u], index[v]) for u, v in g.edges if u in index and v in index]
    return Graph(len(nodes), g.prop_count, frozenset(edges), tuple(g.labels[v] for v in nodes))


def restrict_neighborhood(g, r: int):
    """Induced subgraph on the radius-r ball around the point, renumbered in BFS order.

    Keyings, when present, are restricted along with the nodes.
    """
    if r < 0:
        raise GraphError("radius must be nonnegative")
    pg = as_pointed(g)
    order = bfs_order(pg.graph, pg.point, r)
    out = PointedGraph(induced_subgraph(pg.graph, order), 0)
    if isinstance(g, PointedKeyedGraph):
        keying = None
        if g.keying is not None:
            keying = Keying(tuple(g.keying.values[v] for v in order), g.keying.injective)
        return PointedKeyedGraph(out, keying)
    return out


def component_of(g) -> PointedGraph:
    pg = as_pointed(g)
    return restrict_neighborhood(pg, pg.graph.node_count)


def disjoint_union(g: Graph, h: Graph) -> Graph:
    if g.prop_count != h.prop_count:
        raise GraphError("disjoint union needs equal prop counts")
    off = g.node_count
    edges = set(g.edges) | {(u + off, v + off) for u, v in h.edges}
    return Graph(g.node_count + h.node_count, g.prop_count, frozenset(edges), g.labels + h.labels)


def unravel(g, depth: int) -> PointedGraph:
    """Tree of all walks of length <= depth from the point (walks may backtrack)."""
    if depth < 0:
        raise GraphError("depth must be nonnegative")
    pg = as_pointed(g)
    gr = pg.graph
    ends = [pg.point]
    lengths = [0]
    edges = []
    i = 0
    while i < len(ends):
        if lengths[i] < depth:
            for w in gr.neighbors(ends[i]):
                edges.append((i, len(ends)))
                ends.append(w)
                lengths.append(lengths[i] + 1)
        i += 1
    tree = Graph(len(ends), gr.prop_count, frozenset(edges), tuple(gr.labels[v] for v in ends))
    return PointedGraph(tree, 0)


# ---------------------------------------------------------------- enumeration

def _check_bounds(max_nodes: int, prop_count: int):
    if not 0 <= max_nodes <= MAX_ENUM_NODES or not 0 <= prop_count <= MAX_ENUM_PROPS:
        raise GraphError(
            f"enumeration bound exceeded: max_nodes <= {MAX_ENUM_NODES}, props <= {MAX_ENUM_PROPS}")


def enumerate_graphs(n: int, prop_count: int, connected_only: bool = False) -> Iterator[Graph]:
    """All labeled graphs on exactly n nodes: edge mask major, labeling minor.

    Edge mask bit k stands for the k-th pair of itertools.combinations(range(n), 2);
    labeling bit v*P + l stands for prop l+1 at node v.
    """
    _check_bounds(n, prop_count)
    pairs = list(itertools.combinations(range(n), 2))
    for mask in range(1 << len(pairs)):
        edges = frozenset(p for k, p in enumerate(pairs) if mask >> k & 1)
        base = Graph(n, prop_count, edges)
        if connected_only and not base.is_connected():
            continue
        for lab in range(1 << (n * prop_count)):
            labels = tuple(
                tuple(lab >> (v * prop_count + l) & 1 for l in range(prop_count)) for v in range(n))
            yield Graph(n, prop_count, edges, labels)


def enumerate_pointed_graphs(max_nodes: int, prop_count: int, connected_only: bool = False,
                             min_nodes: int = 1) -> Iterator[PointedGraph]:
    """Every pointed graph with min_nodes..max_nodes nodes, once per (edges, labeling, point)."""
    _check_bounds(max_nodes, prop_count)
    for n in range(min_nodes, max_nodes + 1):
        for g in enumerate_graphs(n, prop_count, connected_only):
            for p in range(n):
                yield PointedGraph(g, p)


# ---------------------------------------------------------------- keys

def _draw_injective(rng: np.random.Generator, n: int) -> np.ndarray:
    ints = rng.integers(-KEY_RANGE, KEY_RANGE + 1, size=n)
    while len(set(ints.tolist())) != n:
        seen = set()
        for i, x in enumerate(ints.tolist()):
            if x in seen:
                ints[i] = rng.integers(-KEY_RANGE, KEY_RANGE + 1)
            seen.add(int(ints[i]))
    return ints


def random_keying(g, seed: int) -> Keying:
    """Injective keys k/1000 with k uniform in [-10^6, 10^6]; colliding draws are redrawn."""
    n = g.node_count
    ints = _draw_injective(np.random.default_rng(seed), n)
    return Keying(tuple(Fraction(int(k), KEY_SCALE) for k in ints))


def keying_numerators(count: int, n: int, seed: int) -> np.ndarray:
    """`count` injective key rows for n nodes, as integer numerators over KEY_SCALE."""
    rng = np.random.default_rng(seed)
    out = rng.integers(-KEY_RANGE, KEY_RANGE + 1, size=(count, n))
    if n > 1:
        srt = np.sort(out, axis=1)
        bad = np.nonzero((np.diff(srt, axis=1) == 0).any(axis=1))[0]
        for i in bad:
            out[i] = _draw_injective(rng, n)
    return out


# ---------------------------------------------------------------- isomorphism

def is_isomorphic(g, h) -> dict | None:
    """Pointed, label-preserving isomorphism by backtracking, or None.

    The witness maps every node of g to a node of h with f(point_g) = point_h.
    """
    g, h = as_pointed(g), as_pointed(h)
    G, H = g.graph, h.graph
    if G.node_count != H.node_count or G.prop_count != H.prop_count or len(G.edges) != len(H.edges):
        return None
    dg, dh = distances(G, g.point), distances(H, h.point)

    def sig(gr, dist, v):
        return (gr.labels[v], gr.degree(v), dist[v])

    sg = [sig(G, dg, v) for v in range(G.node_count)]
    sh = [sig(H, dh, v) for v in range(H.node_count)]
    if sorted(sg) != sorted(sh) or sg[g.point] != sh[h.point]:
        return None
    order = bfs_order(G, g.point)
    order += [v for v in range(G.node_count) if v not in set(order)]
    candidates = {v: [w for w in range(H.node_count) if sh[w] == sg[v]] for v in order}
    candidates[g.point] = [h.point]
    fmap: dict = {}
    used: set = set()

    def extend(i: int) -> bool:
        if i == len(order):
            return True
        v = order[i]
        for w in candidates[v]:
            if w in used:
                continue
            if all(G.has_edge(v, x) == H.has_edge(w, fmap[x]) for x in fmap):
                fmap[v] = w
                used.add(w)
                if extend(i + 1):
                    return True
                del fmap[v]
                used.discard(w)
        return False

    return dict(sorted(fmap.items())) if extend(0) else None
