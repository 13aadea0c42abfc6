"""Color refinement, bisimulation and coverings.

Cross-graph comparisons always run on the disjoint union, so that the color
interner is shared and colors are comparable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graphs import Graph, GraphError, PointedGraph, as_pointed, bfs_order, disjoint_union


# ---------------------------------------------------------------- color refinement

def _canonical(colors) -> list:
    ids: dict = {}
    return [ids.setdefault(c, len(ids)) for c in colors]


def label_coloring(g: Graph) -> list:
    return _canonical(g.labels)


def refine_once(g: Graph, col: list) -> list:
    """One round: intern (own color, sorted multiset of neighbor colors)."""
    return _canonical((col[v], tuple(sorted(col[w] for w in g.neighbors(v))))
                      for v in range(g.node_count))


def color_refine(g: Graph, init=None, d: int = 0) -> list:
    if d < 0:
        raise ValueError("round count must be >= 0")
    col = _canonical(label_coloring(g) if init is None else init)
    for _ in range(d):
        col = refine_once(g, col)
    return col


def _classes(col: list) -> int:
    return len(set(col))


def refinement_rounds(g: Graph, max_rounds: int | None = None) -> tuple:
    """(colorings for rounds 0..s, s) where s is the first round whose partition
    is not refined further (or max_rounds)."""
    cols = [label_coloring(g)]
    limit = g.node_count + 1 if max_rounds is None else max_rounds
    while len(cols) - 1 < limit:
        nxt = refine_once(g, cols[-1])
        if _classes(nxt) == _classes(cols[-1]):
            return cols, len(cols) - 1
        cols.append(nxt)
    return cols, len(cols) - 1


@dataclass(frozen=True)
class CRSignature:
    colors: tuple           # point color per round 0..stable_round
    stable_round: int


def cr_signature(g, max_rounds: int | None = None) -> CRSignature:
    pg = as_pointed(g)
    cols, s = refinement_rounds(pg.graph, max_rounds)
    return CRSignature(tuple(c[pg.point] for c in cols), s)


def _union(g: PointedGraph, h: PointedGraph):
    P = max(g.graph.prop_count, h.graph.prop_count)
    u = disjoint_union(g.graph.with_prop_count(P), h.graph.with_prop_count(P))
    return u, g.point, g.graph.node_count + h.point


def joint_signatures(g, h, max_rounds: int | None = None) -> tuple:
    """Signatures of both points, refined together on the disjoint union."""
    g, h = as_pointed(g), as_pointed(h)
    u, a, b = _union(g, h)
    cols, s = refinement_rounds(u, max_rounds)
    return (CRSignature(tuple(c[a] for c in cols), s), CRSignature(tuple(c[b] for c in cols), s))


FULL = None


def cr_equivalent(g, h, rounds: int | None = FULL) -> bool:
    """Do the two points get the same color in every compared round?"""
    sg, sh = joint_signatures(g, h)
    if rounds is None or rounds >= len(sg.colors):
        return sg.colors == sh.colors
    return sg.colors[:rounds + 1] == sh.colors[:rounds + 1]


# ---------------------------------------------------------------- bisimulation

@dataclass(frozen=True)
class BisimRelation:
    pairs: frozenset        # (node of g, node of h)


@dataclass(frozen=True)
class FunctionalBisim:
    mapping: dict


@dataclass(frozen=True)
class Covering:
    mapping: dict


def _set_refine(u: Graph) -> list:
    col = label_coloring(u)
    while True:
        nxt = _canonical((col[v], frozenset(col[w] for w in u.neighbors(v))) for v in range(u.node_count))
        if _classes(nxt) == _classes(col):
            return nxt
        col = nxt


def bisimilar(g, h) -> BisimRelation | None:
    """Greatest bisimulation between g and h if it relates the two points."""
    g, h = as_pointed(g), as_pointed(h)
    u, a, b = _union(g, h)
    col = _set_refine(u)
    if col[a] != col[b]:
        return None
    n = g.graph.node_count
    pairs = frozenset((x, y) for x in range(n) for y in range(h.graph.node_count)
                      if col[x] == col[n + y])
    return BisimRelation(pairs)


def verify_bisimulation(g, h, rel: BisimRelation) -> bool:
    g, h = as_pointed(g), as_pointed(h)
    G, H = g.graph, h.graph
    Z = rel.pairs
    if (g.point, h.point) not in Z:
        return False
    for x, y in Z:
        if G.labels[x] != H.labels[y]:
            return False
        if any(not any((x2, y2) in Z for y2 in H.neighbors(y)) for x2 in G.neighbors(x)):
            return False
        if any(not any((x2, y2) in Z for x2 in G.neighbors(x)) for y2 in H.neighbors(y)):
            return False
    return True


def r_bisimulation_stages(g, h, r: int) -> list:
    """The staged relations Z_0 ⊇ ... ⊇ Z_r as boolean (|g|, |h|) matrices."""
    g, h = as_pointed(g), as_pointed(h)
    G, H = g.graph, h.graph
    P = max(G.prop_count, H.prop_count)
    G, H = G.with_prop_count(P), H.with_prop_count(P)
    Ag = G.adjacency_matrix().astype(np.int64)
    Ah = H.adjacency_matrix().astype(np.int64)
    z0 = np.array([[G.labels[x] == H.labels[y] for y in range(H.node_count)]
                   for x in range(G.node_count)], dtype=bool).reshape(G.node_count, H.node_count)
    stages = [z0]
    for _ in range(r):
        z = stages[-1].astype(np.int64)
        # forth: every g-neighbor x' of x has an h-neighbor y' of y with z[x', y']
        reach_h = (z @ Ah) > 0                      # [x', y]: some neighbor of y pairs with x'
        forth = (Ag @ (~reach_h).astype(np.int64)) == 0
        reach_g = (Ag @ z) > 0                      # [x, y']: some neighbor of x pairs with y'
        back = ((~reach_g).astype(np.int64) @ Ah) == 0
        stages.append(z0 & forth & back)
    return stages


def r_bisimilar(g, h, r: int) -> bool:
    g, h = as_pointed(g), as_pointed(h)
    return bool(r_bisimulation_stages(g, h, r)[r][g.point, h.point])


# ---------------------------------------------------------------- map searches

def _search(g: PointedGraph, h: PointedGraph, covering: bool) -> dict | None:
    G, H = g.graph, h.graph
    if G.prop_count != H.prop_count:
        return None
    order = bfs_order(G, g.point)
    seen = set(order)
    order += [v for v in range(G.node_count) if v not in seen]
    fmap: dict = {}

    def candidates(v: int) -> list:
        if v == g.point:
            cands = [h.point]
        else:
            placed = [fmap[w] for w in G.neighbors(v) if w in fmap]
            if placed:
                cands = sorted(set(H.neighbors(placed[0])))
            else:
                cands = list(range(H.node_count))
        out = []
        for c in cands:
            if H.labels[c] != G.labels[v]:
                continue
            if covering and H.degree(c) != G.degree(v):
                continue
            if not covering and H.degree(c) > G.degree(v):
                continue
            out.append(c)
        # degree-compatible candidates first
        return sorted(out, key=lambda c: (H.degree(c) != G.degree(v), c))

    def complete(v: int) -> bool:
        return all(w in fmap for w in G.neighbors(v))

    def locally_ok(v: int) -> bool:
        fv = fmap[v]
        images = [fmap[w] for w in G.neighbors(v) if w in fmap]
        if any(not H.has_edge(fv, y) for y in images):
            return False
        if covering and len(set(images)) != len(images):
            return False
        if complete(v) and not set(H.neighbors(fv)) <= set(images):
            return False
        return True

    def extend(i: int) -> bool:
        if i == len(order):
            return True
        v = order[i]
        for c in candidates(v):
            fmap[v] = c
            touched = [v] + [w for w in G.neighbors(v) if w in fmap]
            if all(locally_ok(w) for w in touched) and extend(i + 1):
                return True
            del fmap[v]
        return False

    return dict(sorted(fmap.items())) if extend(0) else None


def _check_map(g: PointedGraph, h: PointedGraph, fmap: dict, covering: bool) -> bool:
    G, H = g.graph, h.graph
    if sorted(fmap) != list(range(G.node_count)) or fmap.get(g.point) != h.point:
        return False
    if any(not 0 <= y < H.node_count for y in fmap.values()):
        return False
    for x in range(G.node_count):
        y = fmap[x]
        if G.labels[x] != H.labels[y]:
            return False
        images = [fmap[w] for w in G.neighbors(x)]
        if any(not H.has_edge(y, z) for z in images):          # forth / homomorphism
            return False
        if not set(H.neighbors(y)) <= set(images):             # back / surjective on neighbors
            return False
        if covering and len(set(images)) != len(images):       # injective on neighbors
            return False
    return True


def find_functional_bisimulation(g, h) -> FunctionalBisim | None:
    """A label- and point-preserving map g -> h whose graph is a bisimulation."""
    m = _search(as_pointed(g), as_pointed(h), covering=False)
    return None if m is None else FunctionalBisim(m)


def verify_functional_bisimulation(g, h, w: FunctionalBisim) -> bool:
    return _check_map(as_pointed(g), as_pointed(h), w.mapping, covering=False)


def find_covering(g, h) -> Covering | None:
    """A covering map g -> h: a homomorphism bijective on every neighborhood."""
    m = _search(as_pointed(g), as_pointed(h), covering=True)
    return None if m is None else Covering(m)


def verify_covering(g, h, w: Covering) -> bool:
    return _check_map(as_pointed(g), as_pointed(h), w.mapping, covering=True)


def _check_cycle(G: Graph, cycle) -> list:
    cycle = list(cycle)
    k = len(cycle)
    if k < 3 or len(set(cycle)) != k or any(not 0 <= v < G.node_count for v in cycle):
        raise GraphError("a simple cycle needs at least 3 distinct nodes of the graph")
    for i in range(k):
        if not G.has_edge(cycle[i], cycle[(i + 1) % k]):
            raise GraphError(f"{cycle[i]} and {cycle[(i + 1) % k]} are not adjacent")
    return cycle


def find_cycle(G: Graph) -> list | None:
    """Some simple cycle of G, by DFS, or None for forests."""
    parent: dict = {}
    for root in range(G.node_count):
        if root in parent:
            continue
        parent[root] = None
        stack = [root]
        while stack:
            v = stack.pop()
            for w in G.neighbors(v):
                if w == parent[v]:
                    continue
                if w in parent:
                    path_v, x = [], v
                    while x is not None:
                        path_v.append(x)
                        x = parent[x]
                    path_w, x = [], w
                    while x is not None:
                        path_w.append(x)
                        x = parent[x]
                    common = next(x for x in path_v if x in set(path_w))
                    a = path_v[:path_v.index(common) + 1]
                    b = path_w[:path_w.index(common)]
                    return a + list(reversed(b))
                parent[w] = v
                stack.append(w)
    return None


def double_cycle_cover(g, cycle=None) -> tuple:
    """Two copies of g with one cycle edge crossed between the copies.

    Returns the pointed double cover and its verified covering onto g.
    """
    g = as_pointed(g)
    G = g.graph
    if cycle is None:
        cycle = find_cycle(G)
        if cycle is None:
            raise GraphError("graph has no cycle")
    cycle = _check_cycle(G, cycle)
    n = G.node_count
    a, b = cycle[-1], cycle[0]
    cut = (min(a, b), max(a, b))
    edges = []
    for (x, y) in G.edges:
        if (x, y) == cut:
            edges += [(x, y + n), (x + n, y)]
        else:
            edges += [(x, y), (x + n, y + n)]
    H = Graph.from_edges(2 * n, edges, list(G.labels) * 2, G.prop_count)
    cover = PointedGraph(H, g.point)
    w = Covering({v: v % n for v in range(2 * n)})
    if not verify_covering(cover, g, w):
        raise AssertionError("double cover failed verification")
    return cover, w
