"""Array arithmetic behind feature evaluation.

Values of a feature over a batch of same-size graphs live in (B, n) arrays.
EXACT mode uses `QArray`: elementwise rationals with int64 storage that
promotes itself to Python integers (object arrays) before anything could
overflow, and demotes back when magnitudes shrink.  FLOAT mode uses plain
float64 arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

LIMIT = 1 << 62


def _maxabs(a: np.ndarray) -> int:
    if a.size == 0:
        return 0
    if a.dtype == object:
        return max(abs(x) for x in a.flat)
    return int(np.abs(a).max())


def _obj(a: np.ndarray) -> np.ndarray:
    return a if a.dtype == object else a.astype(object)


def _small(a: np.ndarray) -> np.ndarray:
    if a.dtype == object and _maxabs(a) < LIMIT:
        return a.astype(np.int64)
    return a


class QArray:
    """Elementwise exact rationals num/den with den > 0 and gcd 1.

    `den is None` means every entry is an integer.
    """

    __slots__ = ("num", "den")

    def __init__(self, num: np.ndarray, den: np.ndarray | None = None):
        self.num = num
        self.den = den

    @property
    def shape(self):
        return self.num.shape

    @classmethod
    def integers(cls, a) -> "QArray":
        a = np.asarray(a)
        if a.dtype == bool or a.dtype.kind in "iu":
            a = a.astype(np.int64)
        return cls(a)

    @classmethod
    def full(cls, shape, q) -> "QArray":
        q = Fraction(q)
        num = _const_array(shape, q.numerator)
        if q.denominator == 1:
            return cls(num)
        return cls(num, _const_array(shape, q.denominator))

    @classmethod
    def from_fractions(cls, values) -> "QArray":
        arr = np.asarray(values, dtype=object)
        num = np.vectorize(lambda q: Fraction(q).numerator, otypes=[object])(arr)
        den = np.vectorize(lambda q: Fraction(q).denominator, otypes=[object])(arr)
        return _normalized(_small(num), _small(den))

    @classmethod
    def ratio(cls, num: np.ndarray, den: np.ndarray | int) -> "QArray":
        den = np.broadcast_to(np.asarray(den, dtype=num.dtype), num.shape).copy()
        return _normalized(num, den)

    def dens(self) -> np.ndarray:
        if self.den is None:
            return np.ones(self.num.shape, dtype=self.num.dtype)
        return self.den

    def to_fractions(self) -> np.ndarray:
        out = np.empty(self.num.shape, dtype=object)
        d = self.dens()
        for idx in np.ndindex(self.num.shape):
            out[idx] = Fraction(int(self.num[idx]), int(d[idx]))
        return out

    def item(self, idx) -> Fraction:
        d = 1 if self.den is None else int(self.den[idx])
        return Fraction(int(self.num[idx]), d)

    def to_float(self) -> np.ndarray:
        if self.den is None and self.num.dtype != object:
            return self.num.astype(float)
        if self.num.dtype != object and (self.den is None or self.den.dtype != object):
            if _maxabs(self.num) < 2**53 and _maxabs(self.dens()) < 2**53:
                return self.num / self.dens()
        return np.vectorize(float, otypes=[float])(self.to_fractions())

    def take(self, index) -> "QArray":
        return QArray(self.num[index], None if self.den is None else self.den[index])


def _const_array(shape, value: int) -> np.ndarray:
    if abs(value) < LIMIT:
        return np.full(shape, value, dtype=np.int64)
    out = np.empty(shape, dtype=object)
    out.fill(value)
    return out


def _normalized(num: np.ndarray, den: np.ndarray) -> QArray:
    if num.dtype != den.dtype:
        num, den = _obj(num), _obj(den)
    g = np.gcd(num, den)
    num = num // g
    den = den // g
    if num.dtype == object:
        num, den = _small(num), _small(den)
        if num.dtype != den.dtype:
            num, den = _obj(num), _obj(den)
    if den.size == 0 or bool((den == 1).all()):
        return QArray(num)
    return QArray(num, den)


def _unify(*arrays):
    if any(a.dtype == object for a in arrays):
        return tuple(_obj(a) for a in arrays)
    return arrays


def q_add(a: QArray, b: QArray) -> QArray:
    if a.den is None and b.den is None:
        if _maxabs(a.num) + _maxabs(b.num) >= LIMIT:
            x, y = _obj(a.num), _obj(b.num)
        else:
            x, y = _unify(a.num, b.num)
        return QArray(_small(x + y) if x.dtype == object else x + y)
    ad, bd = a.dens(), b.dens()
    mda, mdb = _maxabs(ad), _maxabs(bd)
    big = _maxabs(a.num) * mdb + _maxabs(b.num) * mda >= LIMIT or mda * mdb >= LIMIT
    an, bn = a.num, b.num
    if big:
        an, bn, ad, bd = _obj(an), _obj(bn), _obj(ad), _obj(bd)
    else:
        an, bn, ad, bd = _unify(an, bn, ad, bd)
    if a.den is not None and b.den is not None and np.array_equal(ad, bd):
        return _normalized(an + bn, ad.copy())
    return _normalized(an * bd + bn * ad, ad * bd)


def q_scale(a: QArray, q: Fraction) -> QArray:
    q = Fraction(q)
    if q == 1:
        return a
    p, d = q.numerator, q.denominator
    if a.den is None and d == 1:
        if _maxabs(a.num) * abs(p) >= LIMIT:
            return QArray(_obj(a.num) * p)
        return QArray(a.num * p)
    ad = a.dens()
    an = a.num
    if _maxabs(an) * abs(p) >= LIMIT or _maxabs(ad) * d >= LIMIT:
        an, ad = _obj(an), _obj(ad)
    else:
        an, ad = _unify(an, ad)
    return _normalized(an * p, ad * d)


def q_neg(a: QArray) -> QArray:
    return QArray(-a.num, a.den)


def q_sign_num(a: QArray) -> np.ndarray:
    return a.num


def q_gt(a: QArray, b: QArray) -> np.ndarray:
    """Elementwise a > b."""
    if a.den is None and b.den is None:
        x, y = _unify(a.num, b.num)
        return np.asarray(x > y, dtype=bool)
    ad, bd = a.dens(), b.dens()
    an, bn = a.num, b.num
    if _maxabs(an) * _maxabs(bd) >= LIMIT or _maxabs(bn) * _maxabs(ad) >= LIMIT:
        an, bn, ad, bd = _obj(an), _obj(bn), _obj(ad), _obj(bd)
    else:
        an, bn, ad, bd = _unify(an, bn, ad, bd)
    return np.asarray(an * bd > bn * ad, dtype=bool)


def q_where(mask: np.ndarray, a: QArray, b: QArray) -> QArray:
    if a.den is None and b.den is None:
        x, y = _unify(a.num, b.num)
        return QArray(np.where(mask, x, y))
    an, bn, ad, bd = _unify(a.num, b.num, a.dens(), b.dens())
    den = np.where(mask, ad, bd)
    num = np.where(mask, an, bn)
    if bool((den == 1).all()):
        return QArray(num)
    return QArray(num, den)


# ---------------------------------------------------------------- backends

class ExactBackend:
    exact = True

    def const(self, q, shape) -> QArray:
        return QArray.full(shape, q)

    def bits(self, a: np.ndarray) -> QArray:
        return QArray.integers(a)

    def affine(self, coeffs: Sequence[Fraction], xs: Sequence[QArray], bias: Fraction, shape) -> QArray:
        coeffs = [Fraction(c) for c in coeffs]
        if all(c.denominator == 1 for c in coeffs) and bias.denominator == 1 and all(
                x.den is None and x.num.dtype != object for x in xs):
            bound = abs(bias.numerator) + sum(abs(c.numerator) * _maxabs(x.num) for c, x in zip(coeffs, xs))
            if bound < LIMIT:
                acc = np.full(shape, bias.numerator, dtype=np.int64)
                for c, x in zip(coeffs, xs):
                    if c != 0:
                        acc = acc + c.numerator * x.num
                return QArray(acc)
        acc = self.const(bias, shape)
        for c, x in zip(coeffs, xs):
            if c != 0:
                acc = q_add(acc, q_scale(x, c))
        return acc

    def relu(self, x: QArray) -> QArray:
        pos = x.num > 0
        if x.den is None:
            return QArray(np.where(pos, x.num, 0))
        return q_where(pos, x, QArray(np.zeros(x.shape, dtype=np.int64)))

    def heaviside(self, x: QArray) -> QArray:
        return QArray((x.num >= 0).astype(np.int64))

    def square(self, x: QArray) -> QArray:
        n, d = x.num, x.den
        if _maxabs(n) >= 1 << 31 or (d is not None and _maxabs(d) >= 1 << 31):
            n = _obj(n)
            d = None if d is None else _obj(d)
        return QArray(n * n, None if d is None else d * d)

    def triwave(self, x: QArray) -> QArray:
        d = x.dens()
        n, d = _unify(x.num, d)
        if _maxabs(d) * 4 >= LIMIT:
            n, d = _obj(n), _obj(d)
        r = np.abs(np.mod(n, 2 * d) - d)
        if x.den is None:
            return QArray(r)
        return _normalized(r, d.copy())

    def sigmoid(self, x):
        raise ValueError("sigmoid has no exact evaluation")

    def ifpos(self, c: QArray, a: QArray, b: QArray) -> QArray:
        return q_where(c.num > 0, a, b)

    def positive(self, x: QArray, eps=None) -> np.ndarray:
        return np.asarray(x.num > 0, dtype=bool)

    def local_sum(self, x: QArray, adj: np.ndarray) -> QArray:
        B, n = x.shape
        if x.den is None and x.num.dtype != object and _maxabs(x.num) * max(n, 1) < LIMIT:
            return QArray(np.einsum("bij,bj->bi", adj.astype(np.int64), x.num))
        acc = QArray(np.zeros((B, n), dtype=np.int64))
        zero = QArray(np.zeros((B, n), dtype=np.int64))
        for j in range(n):
            col = x.take((slice(None), slice(j, j + 1)))
            col = QArray(np.broadcast_to(col.num, (B, n)),
                         None if col.den is None else np.broadcast_to(col.den, (B, n)))
            acc = q_add(acc, q_where(adj[:, :, j], col, zero))
        return acc

    def local_max(self, x: QArray, adj: np.ndarray) -> QArray:
        B, n = x.shape
        has = adj.any(axis=2)
        if x.den is None and x.num.dtype != object:
            lo = np.iinfo(np.int64).min
            m = np.where(adj, x.num[:, None, :], lo).max(axis=2, initial=lo)
            return QArray(np.where(has, m, 0))
        acc = QArray(np.zeros((B, n), dtype=np.int64))
        seen = np.zeros((B, n), dtype=bool)
        for j in range(n):
            col = x.take((slice(None), slice(j, j + 1)))
            col = QArray(np.broadcast_to(col.num, (B, n)),
                         None if col.den is None else np.broadcast_to(col.den, (B, n)))
            mask = adj[:, :, j]
            better = mask & (~seen | q_gt(col, acc))
            acc = q_where(better, col, acc)
            seen |= mask
        return acc

    def global_sum(self, x: QArray) -> QArray:
        B, n = x.shape
        acc = QArray(np.zeros((B, 1), dtype=np.int64))
        for j in range(n):
            acc = q_add(acc, x.take((slice(None), slice(j, j + 1))))
        return QArray(np.broadcast_to(acc.num, (B, n)).copy(),
                      None if acc.den is None else np.broadcast_to(acc.den, (B, n)).copy())

    def scalar(self, x: QArray, idx) -> Fraction:
        return x.item(idx)


class FloatBackend:
    exact = False
    EPS = 1e-9

    def const(self, q, shape) -> np.ndarray:
        return np.full(shape, float(Fraction(q)))

    def bits(self, a: np.ndarray) -> np.ndarray:
        return np.asarray(a, dtype=float)

    def affine(self, coeffs, xs, bias, shape) -> np.ndarray:
        acc = np.full(shape, float(bias))
        for c, x in zip(coeffs, xs):
            if c != 0:
                acc = acc + float(c) * x
        return acc

    def relu(self, x):
        return np.maximum(x, 0.0)

    def heaviside(self, x):
        return (x >= 0).astype(float)

    def square(self, x):
        return x * x

    def triwave(self, x):
        return np.abs(np.mod(x, 2.0) - 1.0)

    def sigmoid(self, x):
        with np.errstate(over="ignore"):
            return np.where(x >= 0, 1.0 / (1.0 + np.exp(-np.abs(x))),
                            np.exp(-np.abs(x)) / (1.0 + np.exp(-np.abs(x))))

    def ifpos(self, c, a, b):
        return np.where(c > 0, a, b)

    def positive(self, x, eps=None):
        return x > (self.EPS if eps is None else eps)

    def local_sum(self, x, adj):
        return np.einsum("bij,bj->bi", adj.astype(float), x)

    def local_max(self, x, adj):
        has = adj.any(axis=2)
        m = np.where(adj, x[:, None, :], -np.inf).max(axis=2, initial=-np.inf)
        return np.where(has, m, 0.0)

    def global_sum(self, x):
        return np.broadcast_to(x.sum(axis=1, keepdims=True), x.shape).copy()

    def scalar(self, x, idx) -> float:
        return float(x[idx])


EXACT_BACKEND = ExactBackend()
FLOAT_BACKEND = FloatBackend()


# ---------------------------------------------------------------- batches

@dataclass
class GraphBatch:
    """B graphs on the same n nodes; optional per-graph keys."""

    adj: np.ndarray                 # (B, n, n) bool
    labels: np.ndarray              # (B, n, P) bool
    keys: QArray | None = None      # (B, n)

    @property
    def size(self) -> int:
        return self.adj.shape[0]

    @property
    def n(self) -> int:
        return self.adj.shape[1]

    @property
    def prop_count(self) -> int:
        return self.labels.shape[2]

    @classmethod
    def from_graphs(cls, graphs, keyings=None) -> "GraphBatch":
        graphs = list(graphs)
        n = graphs[0].node_count
        P = graphs[0].prop_count
        if any(g.node_count != n or g.prop_count != P for g in graphs):
            raise ValueError("a batch needs graphs of equal size and prop count")
        adj = np.zeros((len(graphs), n, n), dtype=bool)
        labels = np.zeros((len(graphs), n, P), dtype=bool)
        for b, g in enumerate(graphs):
            for u, v in g.edges:
                adj[b, u, v] = adj[b, v, u] = True
            if P:
                labels[b] = np.asarray(g.labels, dtype=bool).reshape(n, P)
        keys = None
        if keyings is not None:
            keys = QArray.from_fractions([list(k.values) for k in keyings]) if n else None
        return cls(adj, labels, keys)

    @classmethod
    def enumerate(cls, n: int, prop_count: int, connected_only: bool = False) -> "GraphBatch":
        """All graphs on n nodes, in the order of graphs.enumerate_graphs."""
        pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
        masks = np.arange(1 << len(pairs))
        adj = np.zeros((len(masks), n, n), dtype=bool)
        for k, (i, j) in enumerate(pairs):
            bit = (masks >> k & 1).astype(bool)
            adj[:, i, j] = adj[:, j, i] = bit
        if connected_only:
            adj = adj[_connected(adj)]
        L = 1 << (n * prop_count)
        labs = np.arange(L)
        bits = np.stack([(labs >> s & 1).astype(bool) for s in range(n * prop_count)], axis=1) \
            if n * prop_count else np.zeros((1, 0), dtype=bool)
        bits = bits.reshape(L, n, prop_count)
        full_adj = np.repeat(adj, L, axis=0)
        full_lab = np.tile(bits, (adj.shape[0], 1, 1))
        return cls(full_adj, full_lab)

    def with_keyings(self, count: int, seed: int) -> "GraphBatch":
        """Repeat each graph `count` times (graph-major) with fresh injective keys."""
        from .graphs import KEY_SCALE, keying_numerators

        adj = np.repeat(self.adj, count, axis=0)
        labels = np.repeat(self.labels, count, axis=0)
        nums = keying_numerators(adj.shape[0], self.n, seed)
        return GraphBatch(adj, labels, QArray.ratio(nums.astype(np.int64), KEY_SCALE))

    def with_keys(self, keys: QArray | None) -> "GraphBatch":
        return GraphBatch(self.adj, self.labels, keys)

    def graph(self, b: int):
        from .graphs import Graph

        n = self.n
        edges = frozenset((i, j) for i in range(n) for j in range(i + 1, n) if self.adj[b, i, j])
        labels = tuple(tuple(int(x) for x in self.labels[b, v]) for v in range(n))
        return Graph(n, self.prop_count, edges, labels)

    def keys_of(self, b: int) -> tuple | None:
        if self.keys is None:
            return None
        return tuple(self.keys.item((b, v)) for v in range(self.n))

    def float_keys(self) -> np.ndarray:
        return self.keys.to_float()


def _connected(adj: np.ndarray) -> np.ndarray:
    B, n, _ = adj.shape
    if n <= 1:
        return np.ones(B, dtype=bool)
    reach = np.zeros((B, n), dtype=bool)
    reach[:, 0] = True
    a = adj.astype(np.int64)
    for _ in range(n):
        reach = reach | (np.einsum("bij,bj->bi", a, reach.astype(np.int64)) > 0)
    return reach.all(axis=1)


def sigmoid_scalar(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)
