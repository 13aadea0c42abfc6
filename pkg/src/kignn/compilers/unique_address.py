"""Unique address separation: two GML walk descriptions each pick out a single
node, and those nodes differ.

An address phi_1..phi_n picks out u_n when u, u_1, ..., u_n is the only walk
from the point whose i-th node satisfies phi_i.
"""

from __future__ import annotations

import enum
from fractions import Fraction
from typing import Sequence

import numpy as np

from .. import features as F
from ..features import AcceptancePolicy, FeatureExpr, GnnClassifier
from ..graphs import as_pointed
from ..logic import ast as L
from ..logic.ast import format_formula
from ..logic.gml import sat_gml
from ..scalar import Mode
from ..vectors import GraphBatch
from .common import ZERO, CompileError, CompileTarget, finish, sigmoid_key
from .logic import gml_feature


class AddressMode(enum.Enum):
    SIGMOID = "sigmoid"
    SEMILINEAR = "semilinear"


def _chain(addr: Sequence, double_at: int | None = None) -> L.Formula:
    """<>(phi_1 & <>(phi_2 & ... <>phi_n)), with <>{>=2} at position double_at."""
    f = None
    for i in reversed(range(len(addr))):
        body = addr[i] if f is None else L.And(addr[i], f)
        f = L.DiamondGeq(2 if i == double_at else 1, body)
    return f


def uniqueness_formula(addr: Sequence) -> L.Formula:
    """GML formula true iff exactly one walk follows the address."""
    some = _chain(addr)
    branching = _chain(addr, 0)
    for i in range(1, len(addr)):
        branching = L.Or(branching, _chain(addr, i))
    return L.And(some, L.Not(branching))


def _key_at_end(addr: Sequence, mode: AddressMode) -> FeatureExpr:
    """Sum, over walks following the address, of the end node's key."""
    feats = [gml_feature(phi) for phi in addr]
    if mode is AddressMode.SIGMOID:
        key = F.relu(F.affine([1, 1], [sigmoid_key(), feats[-1]], -1))
        for f in reversed(feats[:-1]):
            key = F.fmin(F.LocalSum(key), f)
    else:
        key = F.ifpos(feats[-1], F.Val(), ZERO)
        for f in reversed(feats[:-1]):
            key = F.ifpos(f, F.LocalSum(key), ZERO)
    return F.LocalSum(key)


def _address_text(addr: Sequence) -> str:
    return "<" + ", ".join(format_formula(f) for f in addr) + ">"


def compile_unique_address(addr1: Sequence, addr2: Sequence,
                           mode: AddressMode | str = AddressMode.SEMILINEAR) -> GnnClassifier:
    mode = AddressMode(mode)
    addr1, addr2 = list(addr1), list(addr2)
    if not addr1 or not addr2:
        raise CompileError("addresses must be nonempty")
    for phi in addr1 + addr2:
        if not L.is_gml(phi):
            raise CompileError(f"address entries must be GML formulas: {format_formula(phi)}")
    guard = gml_feature(L.And(uniqueness_formula(addr1), uniqueness_formula(addr2)))
    gap = F.fabs(F.sub(_key_at_end(addr1, mode), _key_at_end(addr2, mode)))
    if mode is AddressMode.SIGMOID:
        # several walks can push the gap past 1; capping it keeps a failed
        # guard below 0 without losing any positive gap
        capped = F.fmin(gap, F.const(Fraction(1, 2)))
        expr, num = F.affine([1, 1], [capped, guard], -1), Mode.FLOAT
    else:
        expr, num = F.ifpos(guard, gap, ZERO), Mode.EXACT
    source = f"{_address_text(addr1)} != {_address_text(addr2)} ({mode.value})"
    return finish(expr, CompileTarget.UNIQADDR_LOCALSUM, AcceptancePolicy.POS_NONPOS, num, source)


# ---------------------------------------------------------------- oracle

def addressed_node(g, addr: Sequence) -> int | None:
    """The node uniquely addressed from the point, by counting walks."""
    pg = as_pointed(g)
    batch = GraphBatch.from_graphs([pg.graph])
    A = pg.graph.adjacency_matrix().astype(object)
    walks = np.zeros(pg.node_count, dtype=object)
    walks[pg.point] = 1
    for phi in addr:
        walks = (walks @ A) * sat_gml(phi, batch)[0].astype(object)
    if walks.sum() != 1:
        return None
    return int(np.nonzero(walks)[0][0])


def unique_address_separated(g, addr1: Sequence, addr2: Sequence) -> bool:
    a, b = addressed_node(g, addr1), addressed_node(g, addr2)
    return a is not None and b is not None and a != b
