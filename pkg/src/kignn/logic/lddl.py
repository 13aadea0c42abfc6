"""LDDL: program relations, model checking, normalization and sampling."""

from __future__ import annotations

import random

import numpy as np

from ..graphs import as_pointed
from ..vectors import GraphBatch
from .ast import (STAY, STEP, TOP, And, BoxProg, DiamondProg, Formula, Not, Program, Prop, Seq,
                  Step, Test, Top, Union, UniqueProg, lor, max_prop, seq)
from .gml import LogicError


def _bmm(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.einsum("bij,bjk->bik", a.astype(np.int64), b.astype(np.int64)) > 0


class _Checker:
    """Relations and truth sets over a batch, memoized per subterm."""

    def __init__(self, batch: GraphBatch):
        self.batch = batch
        self.sat_memo: dict = {}
        self.rel_memo: dict = {}

    def rel(self, pi: Program) -> np.ndarray:
        if pi in self.rel_memo:
            return self.rel_memo[pi]
        b = self.batch
        if isinstance(pi, Step):
            r = b.adj.copy()
        elif isinstance(pi, Test):
            r = np.zeros((b.size, b.n, b.n), dtype=bool)
            idx = np.arange(b.n)
            r[:, idx, idx] = self.sat(pi.cond)
        elif isinstance(pi, Seq):
            r = _bmm(self.rel(pi.first), self.rel(pi.second))
        elif isinstance(pi, Union):
            r = self.rel(pi.left) | self.rel(pi.right)
        else:
            raise LogicError(f"not a program: {pi!r}")
        self.rel_memo[pi] = r
        return r

    def sat(self, f: Formula) -> np.ndarray:
        if f in self.sat_memo:
            return self.sat_memo[f]
        b = self.batch
        if isinstance(f, Top):
            r = np.ones((b.size, b.n), dtype=bool)
        elif isinstance(f, Prop):
            r = b.labels[:, :, f.index - 1].copy()
        elif isinstance(f, Not):
            r = ~self.sat(f.arg)
        elif isinstance(f, And):
            r = self.sat(f.left) & self.sat(f.right)
        elif isinstance(f, (DiamondProg, BoxProg, UniqueProg)):
            rel = self.rel(f.program).astype(np.int64)
            if isinstance(f, BoxProg):
                bad = np.einsum("bij,bj->bi", rel, (~self.sat(f.arg)).astype(np.int64))
                r = bad == 0
            else:
                cnt = np.einsum("bij,bj->bi", rel, self.sat(f.arg).astype(np.int64))
                r = cnt >= 1 if isinstance(f, DiamondProg) else cnt == 1
        else:
            raise LogicError(f"not an LDDL formula: {f!r}")
        self.sat_memo[f] = r
        return r


def sat_lddl(phi: Formula, batch: GraphBatch) -> np.ndarray:
    if max_prop(phi) > batch.prop_count:
        raise LogicError(f"formula uses p{max_prop(phi)} but the graph has {batch.prop_count} prop(s)")
    return _Checker(batch).sat(phi)


def program_relation(g, pi: Program) -> set:
    """The pairs (u, v) with v reachable from u by pi."""
    graph = getattr(g, "graph", g)
    if hasattr(graph, "graph"):
        graph = graph.graph
    r = _Checker(GraphBatch.from_graphs([graph])).rel(pi)[0]
    return {(int(u), int(v)) for u, v in zip(*np.nonzero(r))}


def modelcheck_lddl(g, phi: Formula) -> bool:
    pg = as_pointed(g)
    return bool(sat_lddl(phi, GraphBatch.from_graphs([pg.graph]))[0, pg.point])


# ---------------------------------------------------------------- normal form

def _sequences(pi: Program) -> list:
    """pi as a union of sequences of Step / Test atoms (tuples); Test(top) dropped."""
    if isinstance(pi, Step):
        return [(STEP,)]
    if isinstance(pi, Test):
        c = normalize_lddl(pi.cond)
        return [()] if c == TOP else [(Test(c),)]
    if isinstance(pi, Seq):
        return [a + b for a in _sequences(pi.first) for b in _sequences(pi.second)]
    if isinstance(pi, Union):
        return _sequences(pi.left) + _sequences(pi.right)
    raise LogicError(f"not a program: {pi!r}")


def _program(s: tuple) -> Program:
    return seq(*s, STAY)


def normalize_lddl(phi: Formula) -> Formula:
    """Equivalent formula without boxes, whose modalities all take `top` and a
    union of sequences of step/test atoms ending in stay."""
    if isinstance(phi, (Top, Prop)):
        return phi
    if isinstance(phi, Not):
        return Not(normalize_lddl(phi.arg))
    if isinstance(phi, And):
        return And(normalize_lddl(phi.left), normalize_lddl(phi.right))
    if isinstance(phi, BoxProg):
        return normalize_lddl(Not(DiamondProg(phi.program, Not(phi.arg))))
    if isinstance(phi, DiamondProg):
        parts = [DiamondProg(_program(s), TOP) for s in _sequences(Seq(phi.program, Test(phi.arg)))]
        out = parts[0]
        for p in parts[1:]:
            out = lor(out, p)
        return out
    if isinstance(phi, UniqueProg):
        seqs = list(dict.fromkeys(_sequences(Seq(phi.program, Test(phi.arg)))))
        prog = _program(seqs[0])
        for s in seqs[1:]:
            prog = Union(prog, _program(s))
        return UniqueProg(prog, TOP)
    raise LogicError(f"not an LDDL formula: {phi!r}")


def is_normal(phi: Formula) -> bool:
    def seq_ok(p: Program) -> bool:
        while isinstance(p, Seq):
            if not (isinstance(p.first, Step) or (isinstance(p.first, Test) and p.first != STAY
                                                  and is_normal(p.first.cond))):
                return False
            p = p.second
        return p == STAY

    def prog_ok(p: Program) -> bool:
        if isinstance(p, Union):
            return prog_ok(p.left) and prog_ok(p.right)
        return seq_ok(p)

    if isinstance(phi, (Top, Prop)):
        return True
    if isinstance(phi, Not):
        return is_normal(phi.arg)
    if isinstance(phi, And):
        return is_normal(phi.left) and is_normal(phi.right)
    if isinstance(phi, (DiamondProg, UniqueProg)):
        return phi.arg == TOP and prog_ok(phi.program)
    return False


# ---------------------------------------------------------------- sampling

def random_program(rng: random.Random, length: int, depth: int, props: int) -> Program:
    """A program with 1..length atoms; tests carry formulas of modal depth < depth."""
    total = rng.randint(1, length)
    return _random_program(rng, total, depth, props)


def _random_program(rng, atoms: int, depth: int, props: int) -> Program:
    if atoms == 1:
        c = rng.choice(["step", "stay", "test"])
        if c == "step":
            return STEP
        if c == "stay":
            return STAY
        return Test(random_lddl(rng, max(depth - 1, 0), props, fuel=1))
    left = rng.randint(1, atoms - 1)
    a = _random_program(rng, left, depth, props)
    b = _random_program(rng, atoms - left, depth, props)
    return Seq(a, b) if rng.random() < 0.6 else Union(a, b)


def random_lddl(rng: random.Random, depth: int = 2, props: int = 1, fuel: int = 2,
                length: int = 3) -> Formula:
    choices = ["top", "prop"] + (["not", "and"] if fuel > 0 else []) + \
        (["dia", "box", "unique"] if depth > 0 else [])
    c = rng.choice(choices)
    if c == "top":
        return TOP
    if c == "prop":
        return Prop(rng.randint(1, props)) if props else TOP
    if c == "not":
        return Not(random_lddl(rng, depth, props, fuel - 1, length))
    if c == "and":
        return And(random_lddl(rng, depth, props, fuel - 1, length),
                   random_lddl(rng, depth, props, fuel - 1, length))
    pi = random_program(rng, length, depth, props)
    arg = random_lddl(rng, depth - 1, props, fuel, length)
    return {"dia": DiamondProg, "box": BoxProg, "unique": UniqueProg}[c](pi, arg)


def sample_lddl(seed: int, count: int, depth: int = 2, props: int = 1, length: int = 3) -> list:
    """Random LDDL formulas that contain at least one modality."""
    rng = random.Random(seed)
    out = []
    while len(out) < count:
        f = random_lddl(rng, depth, props, length=length)
        if not isinstance(f, (Top, Prop)) and max_prop(f) <= props and _has_modality(f):
            out.append(f)
    return out


def _has_modality(f: Formula) -> bool:
    if isinstance(f, (DiamondProg, BoxProg, UniqueProg)):
        return True
    if isinstance(f, Not):
        return _has_modality(f.arg)
    if isinstance(f, And):
        return _has_modality(f.left) or _has_modality(f.right)
    return False
