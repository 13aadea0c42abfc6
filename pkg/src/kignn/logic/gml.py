"""GML model checking, WGML fragment membership and random formula samplers."""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass

import numpy as np

from ..graphs import as_pointed
from ..vectors import GraphBatch
from .ast import TOP, And, DiamondGeq, Formula, Not, Or, Prop, Top, is_ml, max_prop


class LogicError(ValueError):
    pass


def _check_props(phi: Formula, prop_count: int):
    m = max_prop(phi)
    if m > prop_count:
        raise LogicError(f"formula uses p{m} but the graph has {prop_count} prop(s)")


def sat_gml(phi: Formula, batch: GraphBatch) -> np.ndarray:
    """Truth of phi at every node of every graph in the batch, (B, n) bool."""
    _check_props(phi, batch.prop_count)
    adj = batch.adj.astype(np.int64)
    memo: dict = {}

    def go(f: Formula) -> np.ndarray:
        if f in memo:
            return memo[f]
        if isinstance(f, Top):
            r = np.ones((batch.size, batch.n), dtype=bool)
        elif isinstance(f, Prop):
            r = batch.labels[:, :, f.index - 1].copy()
        elif isinstance(f, Not):
            r = ~go(f.arg)
        elif isinstance(f, And):
            r = go(f.left) & go(f.right)
        elif isinstance(f, Or):
            r = go(f.left) | go(f.right)
        elif isinstance(f, DiamondGeq):
            r = np.einsum("bij,bj->bi", adj, go(f.arg).astype(np.int64)) >= f.grade
        else:
            raise LogicError(f"not a GML formula: {f!r}")
        memo[f] = r
        return r

    return go(phi)


def modelcheck_gml(g, phi: Formula) -> bool:
    """Direct semantics: does the pointed graph satisfy phi at its point?"""
    pg = as_pointed(g)
    return bool(sat_gml(phi, GraphBatch.from_graphs([pg.graph]))[0, pg.point])


# ---------------------------------------------------------------- WGML

class WgmlClass(enum.Enum):
    IN_WGML_TOP = "InWgmlTop"
    IN_WGML_MODAL = "InWgmlModal"
    NOT_WGML = "NotWgml"


@dataclass(frozen=True)
class WgmlMembership:
    kind: WgmlClass
    witness: Formula | None = None

    @property
    def in_top(self) -> bool:
        return self.kind is WgmlClass.IN_WGML_TOP

    @property
    def in_modal(self) -> bool:
        return self.kind is not WgmlClass.NOT_WGML


_RANK = {WgmlClass.IN_WGML_TOP: 0, WgmlClass.IN_WGML_MODAL: 1, WgmlClass.NOT_WGML: 2}


def wgml_membership(phi: Formula) -> WgmlMembership:
    """Syntactic membership in the weakly graded fragments.

    Both grammars close ML formulas under positive and/or and plain diamonds;
    WGML(top) adds the atom <>{>=2}top, WGML(modal) adds <>{>=2}chi for ML chi.
    """
    if is_ml(phi):
        return WgmlMembership(WgmlClass.IN_WGML_TOP)
    if isinstance(phi, (And, Or)):
        a, b = wgml_membership(phi.left), wgml_membership(phi.right)
        return max(a, b, key=lambda m: _RANK[m.kind])
    if isinstance(phi, DiamondGeq):
        if phi.grade == 1:
            return wgml_membership(phi.arg)
        if phi.grade == 2 and phi.arg == TOP:
            return WgmlMembership(WgmlClass.IN_WGML_TOP)
        if phi.grade == 2 and is_ml(phi.arg):
            return WgmlMembership(WgmlClass.IN_WGML_MODAL)
    return WgmlMembership(WgmlClass.NOT_WGML, phi)


# ---------------------------------------------------------------- samplers

def random_gml(rng: random.Random, depth: int = 3, props: int = 2, max_grade: int = 3,
               fuel: int = 3) -> Formula:
    """Uniform choice among productions; `depth` bounds modal nesting and
    `fuel` bounds boolean nesting between two modalities."""
    choices = ["top", "prop"] + (["not", "and", "or"] if fuel > 0 else []) + \
        (["dia"] if depth > 0 else [])
    c = rng.choice(choices)
    if c == "top":
        return TOP
    if c == "prop":
        return Prop(rng.randint(1, props)) if props else TOP
    if c == "not":
        return Not(random_gml(rng, depth, props, max_grade, fuel - 1))
    if c in ("and", "or"):
        cls = And if c == "and" else Or
        return cls(random_gml(rng, depth, props, max_grade, fuel - 1),
                   random_gml(rng, depth, props, max_grade, fuel - 1))
    return DiamondGeq(rng.randint(1, max_grade), random_gml(rng, depth - 1, props, max_grade))


def sample_gml(seed: int, count: int, depth: int = 3, props: int = 2, max_grade: int = 3,
               max_size: int = 40) -> list:
    """`count` random GML formulas of at most `max_size` nodes."""
    rng = random.Random(seed)
    out = []
    while len(out) < count:
        f = random_gml(rng, depth, props, max_grade)
        if _size(f) <= max_size:
            out.append(f)
    return out


def sample_ml(seed: int, count: int, depth: int = 3, props: int = 2, max_size: int = 40) -> list:
    return sample_gml(seed, count, depth, props, 1, max_size)


def _size(f: Formula) -> int:
    if isinstance(f, (Top, Prop)):
        return 1
    if isinstance(f, (Not, DiamondGeq)):
        return 1 + _size(f.arg)
    return 1 + _size(f.left) + _size(f.right)


def random_wgml(rng: random.Random, depth: int, props: int, modal: bool, fuel: int = 2) -> Formula:
    choices = ["ml"] + (["and", "or"] if fuel > 0 else []) + (["dia", "dia2"] if depth > 0 else [])
    c = rng.choice(choices)
    if c == "ml":
        return random_gml(rng, depth, props, 1, fuel)
    if c in ("and", "or"):
        cls = And if c == "and" else Or
        return cls(random_wgml(rng, depth, props, modal, fuel - 1),
                   random_wgml(rng, depth, props, modal, fuel - 1))
    if c == "dia":
        return DiamondGeq(1, random_wgml(rng, depth - 1, props, modal))
    if modal:
        return DiamondGeq(2, random_gml(rng, depth - 1, props, 1))
    return DiamondGeq(2, TOP)


def sample_wgml(seed: int, count: int, modal: bool, depth: int = 3, props: int = 2,
                max_size: int = 40) -> list:
    """Random WGML formulas that actually use a <>{>=2} atom."""
    rng = random.Random(seed)
    out = []
    while len(out) < count:
        f = random_wgml(rng, depth, props, modal)
        if is_ml(f) or _size(f) > max_size:
            continue
        out.append(f)
    return out
